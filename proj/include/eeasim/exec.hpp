#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eeasim/types.hpp"

namespace eea {

struct Version {
    int major = 0;
    int minor = 0;
    int patch = 0;

    auto operator<=>(const Version&) const = default;
    std::string to_string() const;
};

std::optional<Version> parse_version(std::string_view text);

struct ProvidedService {
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;

    auto operator<=>(const ProvidedService&) const = default;
};

struct AppManifest {
    std::string app_name;
    Version version;
    std::vector<ProvidedService> provides;
    std::vector<std::uint16_t> requires_services;
    std::vector<std::string> startup_dependencies;
};

enum class AppState { idle, starting, running, terminating, terminated };

std::string_view to_string(AppState state) noexcept;
bool is_legal_transition(AppState from, AppState to) noexcept;

struct ManifestReport {
    std::vector<std::vector<std::string>> cycles;  // members sorted
    std::vector<std::string> duplicates;
    std::vector<std::string> unknown_dependencies;  // "app -> missing"
    std::vector<std::string> start_order;           // empty when cycles exist

    bool ok() const { return cycles.empty() && duplicates.empty() && unknown_dependencies.empty(); }
};

/// Dependency-respecting order, lexicographic among ready apps.
ManifestReport analyze_manifests(const std::vector<AppManifest>& manifests);

struct StateChange {
    std::string app;
    AppState from = AppState::idle;
    AppState to = AppState::idle;
    Tick tick = 0;
};

struct UpdateReport {
    std::string app_name;
    std::optional<Version> old_version;  // empty when the app was added
    Version new_version;
    bool version_changed = false;
    bool added = false;
    std::vector<std::string> restarted_dependents;
};

class LifecycleListener {
public:
    virtual ~LifecycleListener() = default;
    virtual void on_running(const AppManifest& app) = 0;
    virtual void on_terminating(const AppManifest& app) = 0;
};

// Starts, stops and replaces individual applications of one adaptive node.
class ExecutionManager {
public:
    using TransitionObserver = std::function<void(const StateChange&)>;

    void set_listener(LifecycleListener* listener) { listener_ = listener; }
    /// Called on every transition, before the listener hears about it.
    void set_transition_observer(TransitionObserver observer) { observer_ = std::move(observer); }

    Tick now() const { return now_; }
    void advance_to(Tick tick) { now_ = tick > now_ ? tick : now_; }

    /// Registers every manifest with a unique name (first one wins) and
    /// reports cycles, duplicates and dangling dependencies.
    ManifestReport load_manifests(const std::vector<AppManifest>& manifests);

    /// Brings every non-running app to Running in dependency order.
    /// Throws DependencyCycle or InvalidManifest.
    std::vector<StateChange> start_all();

    /// Idle/Terminated -> Starting -> Running. Throws UnknownApp, IllegalTransition.
    AppState start_app(const std::string& name);
    /// Running -> Terminating -> Terminated. Throws UnknownApp, IllegalTransition.
    AppState stop_app(const std::string& name);

    /// Stops, replaces and restarts one app. Every other app keeps its state
    /// and uptime unless restart_dependents is set. A change that breaks the
    /// dependency graph is rejected with nothing modified.
    /// Throws UnknownApp, InvalidManifest, DependencyCycle.
    UpdateReport update_app(const std::string& name, const AppManifest& manifest, bool restart_dependents = false);

    /// Registers and starts a new app. Throws DuplicateApp, DependencyCycle,
    /// InvalidManifest.
    UpdateReport add_app(const AppManifest& manifest);

    /// Stops (if running) and forgets an app. Throws UnknownApp.
    void remove_app(const std::string& name);

    bool contains(const std::string& name) const { return apps_.contains(name); }
    AppState state(const std::string& name) const;
    /// Ticks since the app last entered Running; 0 when not running.
    Tick uptime(const std::string& name) const;
    const AppManifest& manifest(const std::string& name) const;
    std::vector<std::string> app_names() const;
    std::vector<std::string> running_apps() const;
    std::vector<ProvidedService> offered_services() const;

    const std::vector<std::string>& start_order() const { return start_order_; }
    std::vector<StateChange> drain_transitions() { return std::exchange(transitions_, {}); }

private:
    struct App {
        AppManifest manifest;
        AppState state = AppState::idle;
        Tick running_since = 0;
    };

    App& get(const std::string& name);
    const App& get(const std::string& name) const;
    void transition(App& app, AppState to);
    std::vector<AppManifest> manifests_with(const AppManifest& replacement) const;
    std::vector<std::string> dependents_of(const std::string& name) const;

    std::map<std::string, App> apps_;
    std::vector<std::string> start_order_;
    std::vector<StateChange> transitions_;
    LifecycleListener* listener_ = nullptr;
    TransitionObserver observer_;
    Tick now_ = 0;
};

// Signal-oriented ECU stub. Its only update path replaces the whole image,
// restarting every hosted function.
class ClassicEcu {
public:
    ClassicEcu(std::string name, std::vector<std::string> functions);

    const std::string& name() const { return name_; }
    const Version& image_version() const { return image_version_; }

    void advance_to(Tick tick) { now_ = tick > now_ ? tick : now_; }
    void power_up();
    bool running() const { return running_; }

    Tick uptime(const std::string& function) const;
    const std::vector<std::string>& functions() const { return functions_; }
    std::uint64_t restart_count() const { return restarts_; }

    /// Full ECU reflash: every function restarts at the current tick.
    void update_image(const Version& version);

private:
    std::string name_;
    std::vector<std::string> functions_;
    Version image_version_{1, 0, 0};
    Tick now_ = 0;
    Tick started_at_ = 0;
    bool running_ = false;
    std::uint64_t restarts_ = 0;
};

}  // namespace eea
