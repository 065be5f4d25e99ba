#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "eeasim/error.hpp"
#include "eeasim/signal.hpp"
#include "oracles.hpp"

using namespace eea;

namespace {

SignalDef u8_at(std::uint32_t start, double scale = 1.0, double offset = 0.0) {
    SignalDef s;
    s.name = "s";
    s.start_bit = start;
    s.bit_length = 8;
    s.scale = scale;
    s.offset = offset;
    return s;
}

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an eea::Error";
    return Errc::io_error;
}

}  // namespace

TEST(PackSignal, ByteAlignedIdentity) {
    const Bytes zero(8, 0);
    const auto out = pack_signal(zero, u8_at(0), 127);
    EXPECT_EQ(out, (Bytes{0x7F, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(PackSignal, ScaledValueBecomesRaw) {
    const auto sig = u8_at(0, 0.5);
    const auto out = pack_signal(Bytes(8, 0), sig, 63.5);
    EXPECT_EQ(out[0], 0x7F);
    EXPECT_EQ(unpack_raw(out, sig), 127U);
    EXPECT_DOUBLE_EQ(unpack_signal(out, sig), 63.5);
}

TEST(PackSignal, UnalignedIntelMatchesBitOracle) {
    const auto sig = u8_at(4);
    Bytes out(8, 0);
    pack_raw(out, sig, 0xAB);
    EXPECT_EQ(out[0], 0xB0);
    EXPECT_EQ(out[1], 0x0A);
    EXPECT_EQ(out, oracle::place_bits(Bytes(8, 0), sig, 0xAB));
}

TEST(PackSignal, MotorolaSawtooth) {
    // 12-bit Motorola signal with its MSB at bit 7 of byte 0 occupies all of
    // byte 0 and the top nibble of byte 1.
    SignalDef sig;
    sig.name = "m";
    sig.start_bit = 7;
    sig.bit_length = 12;
    sig.byte_order = ByteOrder::big_endian;
    Bytes out(2, 0);
    pack_raw(out, sig, 0xABC);
    EXPECT_EQ(out, (Bytes{0xAB, 0xC0}));

    // MSB in the middle of a byte wraps to bit 7 of the next byte.
    sig.start_bit = 3;
    sig.bit_length = 8;
    out.assign(2, 0);
    pack_raw(out, sig, 0xA5);
    EXPECT_EQ(out, (Bytes{0x0A, 0x50}));
}

TEST(PackSignal, OutOfRangeIsRangeError) {
    EXPECT_EQ(code_of([] { pack_signal(Bytes(8, 0), u8_at(0), 256); }), Errc::range);
    EXPECT_EQ(code_of([] { pack_signal(Bytes(8, 0), u8_at(0), -1); }), Errc::range);
    auto sig = u8_at(0);
    sig.value_kind = ValueKind::signed_int;
    EXPECT_EQ(code_of([&] { pack_signal(Bytes(8, 0), sig, 128); }), Errc::range);
    EXPECT_NO_THROW(pack_signal(Bytes(8, 0), sig, -128));
}

TEST(PackSignal, RoundsHalfAwayFromZero) {
    auto sig = u8_at(0);
    sig.value_kind = ValueKind::signed_int;
    EXPECT_DOUBLE_EQ(unpack_signal(pack_signal(Bytes(1, 0), sig, 2.5), sig), 3);
    EXPECT_DOUBLE_EQ(unpack_signal(pack_signal(Bytes(1, 0), sig, -2.5), sig), -3);
    EXPECT_DOUBLE_EQ(quantize(sig, 2.4), 2);
}

TEST(PackSignal, SignalOutsidePayloadIsLayoutError) {
    EXPECT_EQ(code_of([] { pack_signal(Bytes(1, 0), u8_at(4), 1); }), Errc::layout);
}

TEST(UnpackSignal, Examples) {
    Bytes payload(8, 0);
    payload[0] = 0x7F;
    EXPECT_DOUBLE_EQ(unpack_signal(payload, u8_at(0)), 127);

    payload[0] = 0xFF;
    auto sig = u8_at(0);
    sig.value_kind = ValueKind::signed_int;
    EXPECT_DOUBLE_EQ(unpack_signal(payload, sig), -1);
}

TEST(UnpackSignal, SixtyFourBitSigned) {
    SignalDef sig;
    sig.name = "w";
    sig.bit_length = 64;
    sig.value_kind = ValueKind::signed_int;
    const Bytes ones(8, 0xFF);
    EXPECT_DOUBLE_EQ(unpack_signal(ones, sig), -1);
}

TEST(SignalProperty, RoundTripAndNonInterference) {
    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t bytes = 1 + rng() % 16;
        const auto sig = oracle::random_signal(rng, bytes);
        const auto raw = oracle::random_raw(rng, sig);
        const double jitter = (static_cast<double>(rng() % 61) - 30.0) / 100.0;  // |j| <= 0.3 of a step
        const double physical = (static_cast<double>(raw) + jitter) * sig.scale + sig.offset;

        Bytes background(bytes);
        for (auto& b : background) b = static_cast<std::uint8_t>(rng());

        const auto packed = pack_signal(background, sig, physical);
        const auto expected_bits = static_cast<std::uint64_t>(raw) &
                                   (sig.bit_length == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << sig.bit_length) - 1);
        ASSERT_EQ(packed, oracle::place_bits(background, sig, expected_bits)) << "case " << i;
        ASSERT_DOUBLE_EQ(unpack_signal(packed, sig), static_cast<double>(raw) * sig.scale + sig.offset) << "case " << i;

        const auto mask = oracle::signal_mask(sig, bytes);
        for (std::size_t p = 0; p < bytes * 8; ++p) {
            if (mask[p]) continue;
            ASSERT_EQ((packed[p / 8] >> (p % 8)) & 1, (background[p / 8] >> (p % 8)) & 1) << "case " << i << " bit " << p;
        }
    }
}

TEST(SignalProperty, BitPositionsMatchOracle) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const auto sig = oracle::random_signal(rng, 1 + rng() % 64);
        const auto positions = sig.bit_positions();
        ASSERT_EQ(positions.size(), sig.bit_length);
        for (std::uint32_t k = 0; k < sig.bit_length; ++k) ASSERT_EQ(positions[k], oracle::raw_bit_position(sig, k));
    }
}

namespace {

FrameDef two_signal_frame() {
    FrameDef def;
    def.frame_id = 0x123;
    def.payload_length = 8;
    SignalDef a;
    a.name = "a";
    a.start_bit = 0;
    a.bit_length = 12;
    SignalDef b;
    b.name = "b";
    b.start_bit = 23;
    b.bit_length = 10;
    b.byte_order = ByteOrder::big_endian;
    b.value_kind = ValueKind::signed_int;
    b.scale = 0.5;
    b.offset = -10;
    def.signals = {a, b};
    return def;
}

}  // namespace

TEST(EncodeFrame, SingleSignal) {
    FrameDef def;
    def.frame_id = 1;
    def.payload_length = 1;
    def.signals = {u8_at(0)};
    const auto frame = encode_frame(def, {{"s", 5}});
    EXPECT_EQ(frame.frame_id, 1U);
    EXPECT_EQ(frame.payload, Bytes{0x05});
    EXPECT_EQ(decode_frame(def, frame), (SignalValues{{"s", 5}}));
}

TEST(EncodeFrame, EmptyMapGivesZeroPayload) {
    auto def = two_signal_frame();
    const auto frame = encode_frame(def, {});
    EXPECT_EQ(frame.payload, Bytes(8, 0));
}

TEST(EncodeFrame, ZeroPayloadDecodesToOffsets) {
    const auto def = two_signal_frame();
    BusFrame frame{def.frame_id, Bytes(8, 0), 0, ""};
    const auto values = decode_frame(def, frame);
    EXPECT_DOUBLE_EQ(values.at("a"), 0);
    EXPECT_DOUBLE_EQ(values.at("b"), -10);
}

TEST(EncodeFrame, UnknownSignal) {
    EXPECT_EQ(code_of([] { encode_frame(two_signal_frame(), {{"zz", 1}}); }), Errc::unknown_signal);
}

TEST(DecodeFrame, Mismatches) {
    const auto def = two_signal_frame();
    EXPECT_EQ(code_of([&] { decode_frame(def, {0x124, Bytes(8, 0), 0, ""}); }), Errc::frame_id_mismatch);
    EXPECT_EQ(code_of([&] { decode_frame(def, {0x123, Bytes(7, 0), 0, ""}); }), Errc::length_mismatch);
}

TEST(EncodeFrame, PackingOrderDoesNotMatter) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) {
        FrameDef def;
        def.frame_id = 7;
        def.payload_length = 8;
        SignalDef a;
        SignalDef b;
        do {
            a = oracle::random_signal(rng, 8);
            a.name = "a";
            b = oracle::random_signal(rng, 8);
            b.name = "b";
            def.signals = {a, b};
        } while ([&] {
            try {
                def.validate();
                return false;
            } catch (const Error&) {
                return true;
            }
        }());
        const double va = static_cast<double>(oracle::random_raw(rng, a)) * a.scale + a.offset;
        const double vb = static_cast<double>(oracle::random_raw(rng, b)) * b.scale + b.offset;
        const auto ab = pack_signal(pack_signal(Bytes(8, 0), a, va), b, vb);
        const auto ba = pack_signal(pack_signal(Bytes(8, 0), b, vb), a, va);
        ASSERT_EQ(ab, ba);
        ASSERT_EQ(encode_frame(def, {{"a", va}, {"b", vb}}).payload, ab);
    }
}

TEST(FrameRoundTrip, RandomFrames) {
    std::mt19937_64 rng(1234);
    int checked = 0;
    while (checked < 1000) {
        FrameDef def;
        def.frame_id = static_cast<std::uint32_t>(rng() % (kMaxFrameId + 1));
        def.payload_length = 1 + rng() % 64;
        std::vector<bool> used(def.payload_length * 8, false);
        const int count = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < count; ++k) {
            auto s = oracle::random_signal(rng, def.payload_length);
            s.name = "s" + std::to_string(k);
            const auto mask = oracle::signal_mask(s, def.payload_length);
            bool clash = false;
            for (std::size_t p = 0; p < mask.size(); ++p) clash = clash || (mask[p] && used[p]);
            if (clash) continue;
            for (std::size_t p = 0; p < mask.size(); ++p) used[p] = used[p] || mask[p];
            def.signals.push_back(s);
        }
        ASSERT_NO_THROW(def.validate());
        SignalValues values;
        for (const auto& s : def.signals) {
            values[s.name] = static_cast<double>(oracle::random_raw(rng, s)) * s.scale + s.offset;
        }
        const auto frame = encode_frame(def, values);
        ASSERT_EQ(frame.payload.size(), def.payload_length);
        const auto decoded = decode_frame(def, frame);
        for (const auto& [name, v] : values) ASSERT_DOUBLE_EQ(decoded.at(name), v);
        ++checked;
    }
}

TEST(FrameDefValidate, RejectsBadLayouts) {
    auto def = two_signal_frame();
    def.signals[1].start_bit = 7;  // overlaps signal a
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);

    def = two_signal_frame();
    def.payload_length = 0;
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);
    def.payload_length = 65;
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);

    def = two_signal_frame();
    def.frame_id = kMaxFrameId + 1;
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::range);

    def = two_signal_frame();
    def.signals[0].bit_length = 0;
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);
    def.signals[0].bit_length = 65;
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);

    def = two_signal_frame();
    def.signals[0].scale = 0;
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::range);

    def = two_signal_frame();
    def.payload_length = 2;  // signal b reaches byte 3
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);

    def = two_signal_frame();
    def.signals[1].name = "a";
    EXPECT_EQ(code_of([&] { def.validate(); }), Errc::layout);
}

TEST(VirtualBus, OneTickLatencyToEveryOtherNode) {
    VirtualBus bus("can0");
    bus.attach("a");
    bus.attach("b");
    bus.attach("c");
    bus.send({0x10, {1}, 5, "a"});
    EXPECT_TRUE(bus.take_due(5).empty());
    const auto due = bus.take_due(6);
    ASSERT_EQ(due.size(), 2U);
    EXPECT_EQ(due[0].receiver, "b");
    EXPECT_EQ(due[1].receiver, "c");
    EXPECT_EQ(due[0].frame.payload, Bytes{1});
    EXPECT_EQ(bus.in_flight(), 0U);
}

TEST(VirtualBus, FifoPerSender) {
    VirtualBus bus("can0");
    bus.attach("a");
    bus.attach("b");
    bus.send({0x10, {5}, 5, "a"});
    bus.send({0x10, {6}, 6, "a"});
    const auto at6 = bus.take_due(6);
    ASSERT_EQ(at6.size(), 1U);
    EXPECT_EQ(at6[0].frame.payload, Bytes{5});
    const auto at7 = bus.take_due(7);
    ASSERT_EQ(at7.size(), 1U);
    EXPECT_EQ(at7[0].frame.payload, Bytes{6});
    EXPECT_LT(at6[0].bus_seq, at7[0].bus_seq);
}

TEST(VirtualBus, NeverDeliversAtOrBeforeSendTick) {
    VirtualBus bus("can0");
    bus.attach("a");
    bus.attach("b");
    std::mt19937_64 rng(5);
    for (Tick t = 0; t < 200; ++t) {
        for (const auto& d : bus.take_due(t)) ASSERT_LT(d.frame.sent_at, t);
        if (rng() % 2) bus.send({1, {static_cast<std::uint8_t>(t)}, t, rng() % 2 ? "a" : "b"});
    }
}

TEST(VirtualBus, RejectsDetachedSender) {
    VirtualBus bus("can0");
    bus.attach("a");
    EXPECT_EQ(code_of([&] { bus.send({1, {}, 0, "z"}); }), Errc::not_attached);
}
