#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tna/ternary.hpp"
#include "test_util.hpp"

using namespace tna;
using D = Tensor<double>;

TEST_CASE("ternarize maps through the symmetric threshold") {
    D w(Shape{9}, {-0.5, -0.1000001, -0.1, -0.05, 0.0, 0.05, 0.1, 0.1000001, 0.5});
    D q = ternarize(w, 0.1);
    // the band [-delta, delta] is inclusive at both ends
    CHECK(q.data() ==
          std::vector<double>{-1, -1, 0, 0, 0, 0, 0, 1, 1});
    CHECK_THROWS_AS(ternarize(w, 0.0), ConfigError);
    CHECK_THROWS_AS(ternarize(w, -0.1), ConfigError);
}

TEST_CASE("binary sign mode maps to two levels") {
    std::vector<double> w = {-0.5, -1e-9, 0.0, 1e-9, 0.5};
    std::vector<double> out;
    ternarize_into(w, 0.1, QuantMode::BinarySign, out);
    CHECK(out == std::vector<double>{-1, -1, 1, 1, 1});
}

TEST_CASE("quantization properties over random weights") {
    std::mt19937_64 rng(53);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<double> w(100000);
    for (double& v : w) v = g(rng);

    SUBCASE("idempotent and sign-preserving") {
        std::vector<double> once, twice;
        ternarize_into(w, 0.1, QuantMode::Ternary, once);
        ternarize_into(once, 0.1, QuantMode::Ternary, twice);
        CHECK(once == twice);
        for (size_t i = 0; i < w.size(); ++i) {
            CHECK((once[i] == -1.0 || once[i] == 0.0 || once[i] == 1.0));
            if (once[i] != 0.0) CHECK(once[i] * w[i] > 0);
        }
    }
    SUBCASE("sparsity grows with the threshold") {
        double prev = -1;
        for (double delta : {0.01, 0.05, 0.1, 0.3, 1.0}) {
            std::vector<double> q;
            ternarize_into(w, delta, QuantMode::Ternary, q);
            double zeros = 0;
            for (double v : q) zeros += v == 0.0;
            double frac = zeros / q.size();
            CHECK(frac >= prev);
            prev = frac;
        }
        std::vector<double> q;
        ternarize_into(w, 1e9, QuantMode::Ternary, q);
        for (double v : q) CHECK(v == 0.0);
    }
}

namespace {

ParamSet<double> small_net(std::uint64_t seed) {
    NetworkSpec spec = parse_architecture("8C3-16FC-Out", 2, 0.0);
    return kaiming_init<double>(spec, 1, 4, 4, 4, seed);
}

} // namespace

TEST_CASE("compression activation and the schedule") {
    TernaryPolicy policy;
    policy.start_epoch = 150;
    auto params = small_net(3);

    SUBCASE("no-op before the scheduled epoch") {
        CompressionState<double> state;
        activate_compression(params, policy, 149, state);
        CHECK_FALSE(state.active);
        CHECK_THROWS_AS(sparsity_report(params, state), ContractError);
    }
    SUBCASE("activates at the scheduled epoch and skips exempt layers") {
        CompressionState<double> state;
        activate_compression(params, policy, 150, state);
        REQUIRE(state.active);
        REQUIRE(state.quantized.size() == 3);
        CHECK(state.quantized[0] == 0); // encoding layer keeps full precision
        CHECK(state.quantized[1] == 1);
        CHECK(state.quantized[2] == 0); // output layer keeps full precision
        CHECK(state.deployed[0].empty());
        CHECK(state.deployed[1].size() == params[1].weight.data().size());
        for (double v : state.deployed[1])
            CHECK((v == -1.0 || v == 0.0 || v == 1.0));
        // latents are untouched
        auto fresh = small_net(3);
        CHECK(params[1].weight.data() == fresh[1].weight.data());
    }
    SUBCASE("activation is sticky and idempotent") {
        CompressionState<double> state;
        activate_compression(params, policy, 150, state);
        auto deployed = state.deployed;
        activate_compression(params, policy, 151, state);
        CHECK(state.deployed == deployed);
    }
    SUBCASE("refresh tracks the latest latent weights") {
        CompressionState<double> state;
        activate_compression(params, policy, 150, state);
        for (double& v : params[1].weight.data()) v = 0.05; // inside the band
        state.refresh(params);
        for (double v : state.deployed[1]) CHECK(v == 0.0);
    }
    SUBCASE("a policy that exempts everything is rejected") {
        NetworkSpec tiny = parse_architecture("4FC-Out", 2, 0.0);
        auto p2 = kaiming_init<double>(tiny, 1, 2, 2, 3, 1);
        CompressionState<double> state;
        CHECK_THROWS_AS(activate_compression(p2, policy, 150, state), ConfigError);
    }
    SUBCASE("policy validation") {
        TernaryPolicy bad;
        bad.delta = 0.0;
        CompressionState<double> state;
        CHECK_THROWS_AS(activate_compression(params, bad, 150, state), ConfigError);
        bad.delta = 0.1;
        bad.start_epoch = -1;
        CHECK_THROWS_AS(activate_compression(params, bad, 150, state), ConfigError);
    }
}

TEST_CASE("straight-through estimator passes gradients to the latent weights") {
    // one fc layer: forward uses the deployed ternary weights, backward lands
    // on the latent full-precision tensor unchanged
    D latent(Shape{2, 2}, {0.3, -0.05, 0.02, -0.4});
    std::vector<double> deployed;
    ternarize_into(latent.data(), 0.1, QuantMode::Ternary, deployed);
    CHECK(deployed == std::vector<double>{1, 0, 0, -1});

    Tape<double> tape;
    D lw = tape.watch(latent);
    D eff = ste_deploy(lw, deployed);
    CHECK(eff.data() == deployed);
    D x(Shape{1, 2}, {2.0, 3.0});
    auto grads = tape.backward(sum(matmul(x, eff)));
    // d loss / d eff = x broadcast across columns; STE forwards it verbatim
    CHECK(grads.at(lw.node()).data() == std::vector<double>{2, 2, 3, 3});
}

TEST_CASE("sparsity report matches the analytic uniform-init rate") {
    // weights ~ U(-b, b) with b = sqrt(1/512): expected zero fraction at
    // threshold delta is min(1, delta / b)
    NetworkSpec spec = parse_architecture("512FC-512FC-Out", 2, 0.0);
    auto params = kaiming_init<double>(spec, 1, 16, 32, 10, 61);
    REQUIRE(params[1].weight.shape() == Shape{512, 512});
    TernaryPolicy policy;
    policy.start_epoch = 0;
    CompressionState<double> state;
    activate_compression(params, policy, 0, state);

    double b = std::sqrt(1.0 / 512);
    double expected = std::min(1.0, policy.delta / b);
    auto report = sparsity_report(params, state);
    REQUIRE(report.size() == 1);
    REQUIRE(report.count("fc1") == 1);
    CHECK(std::abs(report.at("fc1") - expected) < 0.03);

    // a huge threshold zeroes everything
    TernaryPolicy wide;
    wide.delta = 10.0;
    wide.start_epoch = 0;
    CompressionState<double> all_zero;
    activate_compression(params, wide, 0, all_zero);
    CHECK(sparsity_report(params, all_zero).at("fc1") == 1.0);
}

TEST_CASE("co-training hand-off quantizes only the base network") {
    auto base = small_net(5);
    auto twin = small_net(6);
    TernaryPolicy policy;
    policy.start_epoch = 150;

    CompressionState<double> base_state, twin_state;
    tna_ternary_handoff(base, base_state, twin, twin_state, policy, 150, true);
    CHECK(base_state.active);
    CHECK_FALSE(twin_state.active);

    SUBCASE("requires a co-training mode") {
        CompressionState<double> s;
        CHECK_THROWS_AS(
            tna_ternary_handoff(base, s, twin, twin_state, policy, 150, false),
            ConfigError);
    }
    SUBCASE("rejects a premature hand-off") {
        CompressionState<double> s;
        CHECK_THROWS_AS(
            tna_ternary_handoff(base, s, twin, twin_state, policy, 149, true),
            ContractError);
    }
    SUBCASE("rejects a quantized twin") {
        CompressionState<double> s;
        CHECK_THROWS_AS(
            tna_ternary_handoff(base, s, twin, base_state, policy, 150, true),
            ContractError);
    }
}

TEST_CASE("quantized weights stay ternary through training updates") {
    // simulate a few latent updates with refresh after each: the deployed view
    // must remain exactly three-valued while the latents move freely
    auto params = small_net(7);
    TernaryPolicy policy;
    policy.start_epoch = 0;
    CompressionState<double> state;
    activate_compression(params, policy, 0, state);

    std::mt19937_64 rng(71);
    std::normal_distribution<double> g(0.0, 0.02);
    for (int step = 0; step < 5; ++step) {
        for (size_t i = 0; i < params.size(); ++i)
            for (double& v : params[i].weight.data()) v += g(rng);
        state.refresh(params);
        for (size_t i = 0; i < params.size(); ++i) {
            if (!state.quantized[i]) continue;
            std::vector<double> want;
            ternarize_into(params[i].weight.data(), policy.delta, policy.mode, want);
            CHECK(state.deployed[i] == want);
            for (double v : state.deployed[i])
                CHECK((v == -1.0 || v == 0.0 || v == 1.0));
        }
    }
}
