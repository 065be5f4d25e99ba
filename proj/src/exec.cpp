#include "eeasim/exec.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>

#include "eeasim/error.hpp"

namespace eea {

std::string Version::to_string() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

std::optional<Version> parse_version(std::string_view text) {
    Version v;
    int* parts[] = {&v.major, &v.minor, &v.patch};
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 3; ++i) {
        auto [next, ec] = std::from_chars(p, end, *parts[i]);
        if (ec != std::errc{} || *parts[i] < 0) return std::nullopt;
        p = next;
        if (i < 2) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
    }
    if (p != end) return std::nullopt;
    return v;
}

std::string_view to_string(AppState state) noexcept {
    switch (state) {
        case AppState::idle: return "Idle";
        case AppState::starting: return "Starting";
        case AppState::running: return "Running";
        case AppState::terminating: return "Terminating";
        case AppState::terminated: return "Terminated";
    }
    return "?";
}

bool is_legal_transition(AppState from, AppState to) noexcept {
    switch (from) {
        case AppState::idle: return to == AppState::starting;
        case AppState::starting: return to == AppState::running;
        case AppState::running: return to == AppState::terminating;
        case AppState::terminating: return to == AppState::terminated;
        case AppState::terminated: return to == AppState::starting;
    }
    return false;
}

ManifestReport analyze_manifests(const std::vector<AppManifest>& manifests) {
    ManifestReport report;
    std::map<std::string, const AppManifest*> by_name;
    for (const auto& m : manifests) {
        if (!by_name.emplace(m.app_name, &m).second) report.duplicates.push_back(m.app_name);
    }

    std::map<std::string, std::vector<std::string>> deps;
    for (const auto& [name, m] : by_name) {
        auto& out = deps[name];
        for (const auto& d : m->startup_dependencies) {
            if (by_name.contains(d)) {
                out.push_back(d);
            } else {
                report.unknown_dependencies.push_back(name + " -> " + d);
            }
        }
    }

    // Tarjan's strongly connected components.
    std::map<std::string, int> index;
    std::map<std::string, int> low;
    std::set<std::string> on_stack;
    std::vector<std::string> stack;
    int counter = 0;
    std::function<void(const std::string&)> connect = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto& w : deps[v]) {
            if (!index.contains(w)) {
                connect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack.contains(w)) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] != index[v]) return;
        std::vector<std::string> component;
        std::string w;
        do {
            w = stack.back();
            stack.pop_back();
            on_stack.erase(w);
            component.push_back(w);
        } while (w != v);
        const auto& own = deps[v];
        const bool self_loop = std::find(own.begin(), own.end(), v) != own.end();
        if (component.size() > 1 || self_loop) {
            std::sort(component.begin(), component.end());
            report.cycles.push_back(std::move(component));
        }
    };
    for (const auto& [name, _] : by_name) {
        if (!index.contains(name)) connect(name);
    }
    std::sort(report.cycles.begin(), report.cycles.end());
    if (!report.cycles.empty()) return report;

    std::map<std::string, std::size_t> pending;
    std::map<std::string, std::vector<std::string>> dependents;
    for (const auto& [name, ds] : deps) {
        pending[name] = ds.size();
        for (const auto& d : ds) dependents[d].push_back(name);
    }
    std::set<std::string> ready;
    for (const auto& [name, n] : pending) {
        if (n == 0) ready.insert(name);
    }
    while (!ready.empty()) {
        const std::string next = *ready.begin();
        ready.erase(ready.begin());
        report.start_order.push_back(next);
        for (const auto& d : dependents[next]) {
            if (--pending[d] == 0) ready.insert(d);
        }
    }
    return report;
}

ExecutionManager::App& ExecutionManager::get(const std::string& name) {
    auto it = apps_.find(name);
    if (it == apps_.end()) fail(Errc::unknown_app, "no application '" + name + "'");
    return it->second;
}

const ExecutionManager::App& ExecutionManager::get(const std::string& name) const {
    auto it = apps_.find(name);
    if (it == apps_.end()) fail(Errc::unknown_app, "no application '" + name + "'");
    return it->second;
}

void ExecutionManager::transition(App& app, AppState to) {
    if (!is_legal_transition(app.state, to)) {
        fail(Errc::illegal_transition, app.manifest.app_name + ": " + std::string(to_string(app.state)) + " -> " +
                                           std::string(to_string(to)));
    }
    transitions_.push_back({app.manifest.app_name, app.state, to, now_});
    app.state = to;
    if (observer_) observer_(transitions_.back());
    if (to == AppState::running) {
        app.running_since = now_;
        if (listener_ != nullptr) listener_->on_running(app.manifest);
    } else if (to == AppState::terminating) {
        if (listener_ != nullptr) listener_->on_terminating(app.manifest);
    }
}

ManifestReport ExecutionManager::load_manifests(const std::vector<AppManifest>& manifests) {
    auto report = analyze_manifests(manifests);
    for (const auto& m : manifests) {
        if (!apps_.contains(m.app_name)) apps_.emplace(m.app_name, App{m});
    }
    start_order_ = report.start_order;
    return report;
}

std::vector<StateChange> ExecutionManager::start_all() {
    std::vector<AppManifest> current;
    for (const auto& [_, app] : apps_) current.push_back(app.manifest);
    const auto report = analyze_manifests(current);
    if (!report.cycles.empty()) fail(Errc::dependency_cycle, "startup dependencies contain a cycle");
    if (!report.unknown_dependencies.empty()) {
        fail(Errc::invalid_manifest, "unresolved dependency " + report.unknown_dependencies.front());
    }
    start_order_ = report.start_order;
    const auto first = transitions_.size();
    for (const auto& name : start_order_) {
        auto& app = get(name);
        if (app.state == AppState::idle || app.state == AppState::terminated) start_app(name);
    }
    return {transitions_.begin() + static_cast<std::ptrdiff_t>(first), transitions_.end()};
}

AppState ExecutionManager::start_app(const std::string& name) {
    auto& app = get(name);
    transition(app, AppState::starting);
    transition(app, AppState::running);
    return app.state;
}

AppState ExecutionManager::stop_app(const std::string& name) {
    auto& app = get(name);
    transition(app, AppState::terminating);
    transition(app, AppState::terminated);
    return app.state;
}

std::vector<AppManifest> ExecutionManager::manifests_with(const AppManifest& replacement) const {
    std::vector<AppManifest> out;
    bool replaced = false;
    for (const auto& [name, app] : apps_) {
        if (name == replacement.app_name) {
            out.push_back(replacement);
            replaced = true;
        } else {
            out.push_back(app.manifest);
        }
    }
    if (!replaced) out.push_back(replacement);
    return out;
}

std::vector<std::string> ExecutionManager::dependents_of(const std::string& name) const {
    std::set<std::string> found;
    std::vector<std::string> frontier{name};
    while (!frontier.empty()) {
        const auto current = frontier.back();
        frontier.pop_back();
        for (const auto& [other, app] : apps_) {
            const auto& ds = app.manifest.startup_dependencies;
            if (std::find(ds.begin(), ds.end(), current) != ds.end() && found.insert(other).second) {
                frontier.push_back(other);
            }
        }
    }
    return {found.begin(), found.end()};
}

UpdateReport ExecutionManager::update_app(const std::string& name, const AppManifest& manifest,
                                          bool restart_dependents) {
    auto& app = get(name);
    if (manifest.app_name != name) {
        fail(Errc::invalid_manifest, "manifest for '" + manifest.app_name + "' cannot update '" + name + "'");
    }
    const auto report = analyze_manifests(manifests_with(manifest));
    if (!report.cycles.empty()) fail(Errc::dependency_cycle, "update of '" + name + "' introduces a cycle");
    if (!report.unknown_dependencies.empty()) {
        fail(Errc::invalid_manifest, "unresolved dependency " + report.unknown_dependencies.front());
    }

    UpdateReport out;
    out.app_name = name;
    out.old_version = app.manifest.version;
    out.new_version = manifest.version;
    out.version_changed = app.manifest.version != manifest.version;

    std::vector<std::string> to_restart;
    if (restart_dependents) {
        for (const auto& d : dependents_of(name)) {
            if (get(d).state == AppState::running) to_restart.push_back(d);
        }
    }
    // Dependents go down first, in reverse start order.
    std::vector<std::string> ordered;
    for (auto it = report.start_order.rbegin(); it != report.start_order.rend(); ++it) {
        if (std::find(to_restart.begin(), to_restart.end(), *it) != to_restart.end()) ordered.push_back(*it);
    }
    for (const auto& d : ordered) stop_app(d);

    if (app.state == AppState::running) stop_app(name);
    app.manifest = manifest;
    start_order_ = report.start_order;
    if (app.state == AppState::idle || app.state == AppState::terminated) start_app(name);

    for (auto it = ordered.rbegin(); it != ordered.rend(); ++it) start_app(*it);
    out.restarted_dependents = {ordered.rbegin(), ordered.rend()};
    return out;
}

UpdateReport ExecutionManager::add_app(const AppManifest& manifest) {
    if (apps_.contains(manifest.app_name)) fail(Errc::duplicate_app, "'" + manifest.app_name + "' already exists");
    const auto report = analyze_manifests(manifests_with(manifest));
    if (!report.cycles.empty()) fail(Errc::dependency_cycle, "'" + manifest.app_name + "' introduces a cycle");
    if (!report.unknown_dependencies.empty()) {
        fail(Errc::invalid_manifest, "unresolved dependency " + report.unknown_dependencies.front());
    }
    apps_.emplace(manifest.app_name, App{manifest});
    start_order_ = report.start_order;
    start_app(manifest.app_name);

    UpdateReport out;
    out.app_name = manifest.app_name;
    out.new_version = manifest.version;
    out.version_changed = true;
    out.added = true;
    return out;
}

void ExecutionManager::remove_app(const std::string& name) {
    auto& app = get(name);
    for (const auto& [other, a] : apps_) {
        const auto& ds = a.manifest.startup_dependencies;
        if (other != name && std::find(ds.begin(), ds.end(), name) != ds.end()) {
            fail(Errc::invalid_manifest, "'" + other + "' depends on '" + name + "'");
        }
    }
    if (app.state == AppState::running) stop_app(name);
    apps_.erase(name);
    std::erase(start_order_, name);
}

AppState ExecutionManager::state(const std::string& name) const { return get(name).state; }

Tick ExecutionManager::uptime(const std::string& name) const {
    const auto& app = get(name);
    return app.state == AppState::running ? now_ - app.running_since : 0;
}

const AppManifest& ExecutionManager::manifest(const std::string& name) const { return get(name).manifest; }

std::vector<std::string> ExecutionManager::app_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : apps_) out.push_back(name);
    return out;
}

std::vector<std::string> ExecutionManager::running_apps() const {
    std::vector<std::string> out;
    for (const auto& [name, app] : apps_) {
        if (app.state == AppState::running) out.push_back(name);
    }
    return out;
}

std::vector<ProvidedService> ExecutionManager::offered_services() const {
    std::set<ProvidedService> out;
    for (const auto& [_, app] : apps_) {
        if (app.state != AppState::running) continue;
        out.insert(app.manifest.provides.begin(), app.manifest.provides.end());
    }
    return {out.begin(), out.end()};
}

ClassicEcu::ClassicEcu(std::string name, std::vector<std::string> functions)
    : name_(std::move(name)), functions_(std::move(functions)) {}

void ClassicEcu::power_up() {
    running_ = true;
    started_at_ = now_;
}

Tick ClassicEcu::uptime(const std::string& function) const {
    if (std::find(functions_.begin(), functions_.end(), function) == functions_.end()) {
        fail(Errc::unknown_app, "ECU '" + name_ + "' hosts no function '" + function + "'");
    }
    return running_ ? now_ - started_at_ : 0;
}

void ClassicEcu::update_image(const Version& version) {
    running_ = false;
    image_version_ = version;
    ++restarts_;
    power_up();
}

}  // namespace eea
