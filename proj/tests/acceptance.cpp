// Release gate: one pass/fail line per criterion, nonzero exit on any failure.
// Everything runs single-threaded on synthetic data in a scratch directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <unistd.h>

#include "tna/train.hpp"
#include "test_util.hpp"

using namespace tna;
namespace fs = std::filesystem;
using D = Tensor<double>;

namespace {

int g_failures = 0;
fs::path g_scratch;

void criterion(int index, const std::string& name,
               const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    std::printf("[%d] %-28s %s%s%s\n", index, name.c_str(),
                ok ? "PASS" : "FAIL", detail.empty() ? "" : "  -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// ---- criterion 1: BPTT vs the hand-unrolled symbolic oracle ----------------

bool lif_gradient_oracle(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    int exercised = 0;
    std::vector<double> alphas = {0.9, 0.5, 0.2};
    for (size_t c = 0; c < alphas.size(); ++c) {
        oracle::LifOracle orc;
        orc.n_in = 2;
        orc.n_out = 2;
        orc.timesteps = 3;
        orc.alpha = alphas[c];
        orc.theta = 1.0;
        orc.width = 0.5;
        orc.weights = {0.8, -0.5, 0.6, 0.9};
        orc.inputs = {{1.0, 0.5}, {0.2, 0.9}, {0.7, 0.1}};
        orc.readout = {1.0, -0.6};

        std::vector<double> og = orc.grad();
        double mass = 0;
        for (double g : og) mass += std::abs(g);
        if (mass > 0) ++exercised;

        Tape<double> tape;
        D w0(Shape{2, 2}, {orc.weights[0], orc.weights[2], orc.weights[1],
                           orc.weights[3]});
        D w = tape.watch(w0);
        LifParams lif{orc.alpha, orc.theta, orc.width};
        LifState<double> state{D(Shape{1, 2}), D(Shape{1, 2})};
        D v(Shape{1, 2}, {orc.readout[0], orc.readout[1]});
        D loss;
        for (int t = 0; t < orc.timesteps; ++t) {
            D x(Shape{1, 2}, {orc.inputs[t][0], orc.inputs[t][1]});
            auto [next, spikes] = lif_step(state, matmul(x, w), lif);
            state = next;
            D term = sum(mul(spikes, v));
            loss = t == 0 ? term : add(loss, term);
        }
        if (std::abs(loss.item() - orc.loss(orc.weights)) > 1e-12) {
            detail = "forward mismatch";
            return false;
        }
        auto grads = tape.backward(loss);
        const std::vector<double>& g = grads.at(w.node()).data();
        std::vector<double> eng = {g[0], g[2], g[1], g[3]};
        for (int i = 0; i < 4; ++i)
            worst = std::max(worst, std::abs(eng[i] - og[i]));
    }
    double secs = elapsed_s(t0);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max abs err %.2e, %.2fs", worst, secs);
    detail = buf;
    return worst < 1e-10 && exercised > 0 && secs < 1.0;
}

// ---- criterion 2: finite-difference sweep over the differentiable ops ------

bool finite_difference_suite(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-2, 2);
    auto fill = [&](std::vector<double>& v) {
        for (double& x : v) x = u(rng);
    };
    double worst = 0;
    auto check = [&](const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x,
                     const std::vector<double>& got) {
        std::vector<double> fd = oracle::central_diff(f, x);
        worst = std::max(worst, oracle::max_rel_err(got, fd));
    };

    for (int trial = 0; trial < 20; ++trial) {
        { // matmul
            std::vector<double> a(12), b(20);
            fill(a);
            fill(b);
            Tape<double> tape;
            D aw = tape.watch(D(Shape{3, 4}, a));
            D bt(Shape{4, 5}, b);
            auto grads = tape.backward(sum(matmul(aw, bt)));
            check(
                [&](const std::vector<double>& x) {
                    return sum(matmul(D(Shape{3, 4}, x), bt)).item();
                },
                a, grads.at(aw.node()).data());
        }
        { // conv2d, kernel and input sides
            std::vector<double> img(2 * 5 * 5), ker(2 * 2 * 9);
            fill(img);
            fill(ker);
            Tape<double> tape;
            D kw = tape.watch(D(Shape{2, 2, 3, 3}, ker));
            D iw = tape.watch(D(Shape{1, 2, 5, 5}, img));
            auto grads = tape.backward(sum(conv2d(iw, kw)));
            D in_fixed(Shape{1, 2, 5, 5}, img);
            check(
                [&](const std::vector<double>& x) {
                    return sum(conv2d(in_fixed, D(Shape{2, 2, 3, 3}, x))).item();
                },
                ker, grads.at(kw.node()).data());
            D k_fixed(Shape{2, 2, 3, 3}, ker);
            check(
                [&](const std::vector<double>& x) {
                    return sum(conv2d(D(Shape{1, 2, 5, 5}, x), k_fixed)).item();
                },
                img, grads.at(iw.node()).data());
        }
        { // avgpool2 (through a square so the gradient is input-dependent)
            std::vector<double> img(1 * 1 * 4 * 4);
            fill(img);
            Tape<double> tape;
            D iw = tape.watch(D(Shape{1, 1, 4, 4}, img));
            auto grads = tape.backward(sum(mul(avgpool2(iw), avgpool2(iw))));
            check(
                [&](const std::vector<double>& x) {
                    D t(Shape{1, 1, 4, 4}, x);
                    return sum(mul(avgpool2(t), avgpool2(t))).item();
                },
                img, grads.at(iw.node()).data());
        }
        { // log-softmax
            std::vector<double> logits(3 * 4), weights(3 * 4);
            fill(logits);
            fill(weights);
            D wt(Shape{3, 4}, weights);
            Tape<double> tape;
            D lw = tape.watch(D(Shape{3, 4}, logits));
            auto grads = tape.backward(sum(mul(log_softmax(lw), wt)));
            check(
                [&](const std::vector<double>& x) {
                    return sum(mul(log_softmax(D(Shape{3, 4}, x)), wt)).item();
                },
                logits, grads.at(lw.node()).data());
        }
        { // cross-entropy over two timesteps
            std::vector<double> s0(3 * 4), s1(3 * 4);
            fill(s0);
            fill(s1);
            std::vector<int> labels = {1, 3, 0};
            D step1(Shape{3, 4}, s1);
            Tape<double> tape;
            D w0 = tape.watch(D(Shape{3, 4}, s0));
            auto grads = tape.backward(ce_loss<double>({w0, step1}, labels));
            check(
                [&](const std::vector<double>& x) {
                    return ce_loss<double>({D(Shape{3, 4}, x), step1}, labels)
                        .item();
                },
                s0, grads.at(w0.node()).data());
        }
    }
    double secs = elapsed_s(t0);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e, %.2fs", worst, secs);
    detail = buf;
    return worst < 1e-4 && secs < 30.0;
}

// ---- criterion 3: exact reference values for the model equations -----------

bool equation_hand_cases(std::string& detail) {
    // membrane update: decay + integrate, then the multiplicative reset
    LifParams p{0.9, 1.0, 0.5};
    auto step = [&](double u_prev, double s_prev, double cur) {
        LifState<double> st{D(Shape{1, 1}, {u_prev}), D(Shape{1, 1}, {s_prev})};
        auto [next, spikes] = lif_step(st, D(Shape{1, 1}, {cur}), p);
        return std::pair<double, double>(next.u.item(), spikes.item());
    };
    auto [u1, s1] = step(0.8, 0.0, 0.3);
    if (std::abs(u1 - 1.02) > 1e-12 || s1 != 1.0) {
        detail = "integration case";
        return false;
    }
    auto [u2, s2] = step(0.8, 1.0, 0.3);
    if (std::abs(u2 - 0.3) > 1e-12 || s2 != 0.0) {
        detail = "reset case";
        return false;
    }

    // surrogate boundary: |u - theta| = width is inside the window
    D edge(Shape{4}, {0.5, -0.5, 0.5000001, 0.0});
    std::vector<double> want = {0.5, 0.5, 0.0, 0.5};
    if (boxcar(edge, 0.5).data() != want) {
        detail = "surrogate boundary";
        return false;
    }

    // quantizer boundary: |W| = delta maps to zero
    D w(Shape{5}, {-0.1000001, -0.1, 0.0, 0.1, 0.1000001});
    if (ternarize(w, 0.1).data() != std::vector<double>{-1, 0, 0, 0, 1}) {
        detail = "quantizer boundary";
        return false;
    }

    // uniform logits
    for (int c : {2, 10, 100}) {
        D loss = ce_loss<double>({D(Shape{1, c}, std::vector<double>(c, 0.3))},
                                 {0});
        if (std::abs(loss.item() - std::log(double(c))) > 1e-9) {
            detail = "uniform cross-entropy";
            return false;
        }
    }

    // combined loss with a zero matching weight = plain sum of cross-entropies
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> a(8), b(8);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    std::vector<int> labels = {1, 0};
    TnaLossConfig cfg;
    cfg.alpha_match = 0.0;
    auto parts = tna_loss<double>(
        {{D(Shape{2, 4}, a)}, {D(Shape{2, 4}, b)}}, labels, cfg);
    double want_total = ce_loss<double>({D(Shape{2, 4}, a)}, labels).item() +
                        ce_loss<double>({D(Shape{2, 4}, b)}, labels).item();
    if (std::abs(parts.total.item() - want_total) > 1e-9) {
        detail = "zero-alpha combined loss";
        return false;
    }
    return true;
}

// ---- criterion 4: ternary compliance on the full-size architecture ---------

bool ternary_compliance(std::string& detail) {
    NetworkSpec spec = parse_architecture(
        "128C3-256C3-AP2-512C3-AP2-1023C3-512C3-1024FC-512FC-Out", 5, 0.2);
    auto params = kaiming_init<float>(spec, 3, 32, 32, 10, 17);
    std::vector<std::vector<float>> before;
    for (const auto& l : params) before.push_back(l.weight.data());

    TernaryPolicy policy;
    policy.start_epoch = 150;
    CompressionState<float> comp;
    activate_compression(params, policy, 150, comp);
    if (!comp.active) {
        detail = "did not activate";
        return false;
    }
    size_t n = params.size();
    if (comp.quantized[0] || comp.quantized[n - 1]) {
        detail = "exempt layer quantized";
        return false;
    }
    // exempt layers bit-unchanged, non-exempt deployed strictly three-valued
    std::mt19937_64 rng(19);
    std::normal_distribution<float> g(0.0f, 0.01f);
    for (int step = 0; step < 3; ++step) {
        for (size_t l = 0; l < n; ++l) {
            if (!comp.quantized[l]) continue;
            for (float& v : params[l].weight.data()) v += g(rng);
        }
        comp.refresh(params);
        for (size_t l = 0; l < n; ++l) {
            if (!comp.quantized[l]) {
                if (params[l].weight.data() != before[l]) {
                    detail = "exempt layer drifted";
                    return false;
                }
                continue;
            }
            for (float v : comp.deployed[l])
                if (v != -1.0f && v != 0.0f && v != 1.0f) {
                    detail = "non-ternary deployed value";
                    return false;
                }
        }
    }

    // property sweep: idempotence and sign preservation, zero violations
    std::mt19937_64 prng(23);
    std::normal_distribution<double> pd(0.0, 0.3);
    std::vector<double> w(1000000);
    for (double& v : w) v = pd(prng);
    std::vector<double> once, twice;
    ternarize_into(w, 0.1, QuantMode::Ternary, once);
    ternarize_into(once, 0.1, QuantMode::Ternary, twice);
    if (once != twice) {
        detail = "not idempotent";
        return false;
    }
    for (size_t i = 0; i < w.size(); ++i) {
        double q = once[i];
        if (q != -1.0 && q != 0.0 && q != 1.0) {
            detail = "codomain violation";
            return false;
        }
        if (q != 0.0 && q * w[i] <= 0) {
            detail = "sign violation";
            return false;
        }
    }
    detail = "1e6 weights, zero violations";
    return true;
}

// ---- desk-scale training helpers -------------------------------------------

TrainConfig desk_config(const std::string& run_name) {
    TrainConfig cfg;
    cfg.dataset = "synthetic_images";
    cfg.arch = "256FC-Out";
    cfg.timesteps = 5;
    cfg.batch_size = 64;
    cfg.dropout = 0.0;
    cfg.augment = false;
    cfg.record_walltime = false;
    cfg.synth_train = 2000;
    cfg.synth_test = 1000;
    cfg.out_dir = (g_scratch / run_name).string();
    return cfg;
}

double test_accuracy(const TrainConfig& cfg) {
    Checkpoint cp =
        load_checkpoint((fs::path(cfg.out_dir) / "checkpoint_final.bin").string());
    ParamSet<float> params;
    std::vector<char> quantized;
    checkpoint_to_params(cp, params, quantized);
    NetworkSpec spec = parse_architecture(cp.arch, cp.timesteps, 0.0);
    DatasetHandle train_ref = load_dataset(cfg, true);
    DatasetHandle test = load_dataset(cfg, false);
    AugmentConfig norm = make_augment(cfg, train_ref);
    norm.enabled = false;
    return evaluate(spec, params, nullptr, test, norm, cfg.lif, cfg.batch_size);
}

// ---- criterion 5: the small network learns the task fast -------------------

bool desk_scale_learning(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg = desk_config("desk");
    cfg.mode = TrainMode::Baseline;
    cfg.n_networks = 1;
    cfg.epochs = 10;
    DatasetHandle data = load_dataset(cfg, true);
    train(cfg, data);
    double acc = test_accuracy(cfg);
    double secs = elapsed_s(t0);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "test acc %.4f in %.1fs", acc, secs);
    detail = buf;
    // calibrated floor: the reference run reaches 1.00 on this task; allow a
    // 3-point margin, never below the 0.75 hard requirement
    return acc >= 0.97 && secs < 600.0;
}

// ---- criterion 6: co-training is non-inferior and the match loss drops -----

struct SeedOutcome {
    double tna_acc = 0, baseline_acc = 0, kd_acc = 0, kdce_acc = 0;
    double match_first = 0, match_last = 0;
};

std::vector<SeedOutcome> g_outcomes; // filled by criterion 6, reused by 7
std::string g_teacher_path;

bool tna_directional_trend(std::string& detail) {
    double tna_sum = 0, base_sum = 0;
    bool match_ok = true;
    for (int s = 1; s <= 5; ++s) {
        SeedOutcome out;
        TrainConfig tna = desk_config("tna_s" + std::to_string(s));
        tna.mode = TrainMode::Tna;
        tna.n_networks = 2;
        tna.epochs = 30;
        tna.seed_base = 10 * s + 1;
        tna.seed_twin = 10 * s + 2;
        tna.seed_data = 10 * s + 3;
        TrainResult tr = train(tna, load_dataset(tna, true));
        out.tna_acc = test_accuracy(tna);
        out.match_first = tr.metrics.front().match_loss;
        out.match_last = tr.metrics.back().match_loss;
        if (!(out.match_last < 0.5 * out.match_first)) match_ok = false;

        TrainConfig base = desk_config("base_s" + std::to_string(s));
        base.mode = TrainMode::Baseline;
        base.n_networks = 1;
        base.epochs = 30;
        base.seed_base = 10 * s + 1;
        base.seed_data = 10 * s + 3;
        train(base, load_dataset(base, true));
        out.baseline_acc = test_accuracy(base);

        tna_sum += out.tna_acc;
        base_sum += out.baseline_acc;
        g_outcomes.push_back(out);
    }
    double tna_mean = tna_sum / 5, base_mean = base_sum / 5;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "mean acc tna %.4f vs baseline %.4f; match drop %s", tna_mean,
                  base_mean, match_ok ? "in every run" : "VIOLATED");
    detail = buf;
    return tna_mean >= base_mean - 0.005 && match_ok;
}

// ---- criterion 7: distillation ordering and the frozen-teacher contract ----

bool kd_ordering(std::string& detail) {
    if (g_outcomes.size() != 5) {
        detail = "depends on the co-training runs";
        return false;
    }
    // teacher: a solid baseline model on the shared task
    TrainConfig tcfg = desk_config("teacher");
    tcfg.mode = TrainMode::Baseline;
    tcfg.n_networks = 1;
    tcfg.epochs = 10;
    train(tcfg, load_dataset(tcfg, true));
    g_teacher_path = (fs::path(tcfg.out_dir) / "checkpoint_final.bin").string();

    double kd_sum = 0, kdce_sum = 0, tna_sum = 0;
    for (int s = 1; s <= 5; ++s) {
        for (TrainMode mode : {TrainMode::Kd, TrainMode::KdCe}) {
            bool pure = mode == TrainMode::Kd;
            TrainConfig cfg = desk_config((pure ? "kd_s" : "kdce_s") +
                                          std::to_string(s));
            cfg.mode = mode;
            cfg.n_networks = 1;
            cfg.epochs = 30;
            cfg.seed_base = 10 * s + 1;
            cfg.seed_data = 10 * s + 3;
            cfg.teacher_checkpoint = g_teacher_path;
            train(cfg, load_dataset(cfg, true));
            double acc = test_accuracy(cfg);
            (pure ? kd_sum : kdce_sum) += acc;
            if (pure) g_outcomes[s - 1].kd_acc = acc;
            else g_outcomes[s - 1].kdce_acc = acc;
        }
        tna_sum += g_outcomes[s - 1].tna_acc;
    }
    double kd_mean = kd_sum / 5, kdce_mean = kdce_sum / 5, tna_mean = tna_sum / 5;

    // structural check: the pure-distillation gradient ignores the labels
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> sl(6), tl(6);
    for (double& v : sl) v = u(rng);
    for (double& v : tl) v = u(rng);
    TnaLossConfig lc;
    lc.mode = TrainMode::Kd;
    lc.n_networks = 1;
    std::vector<std::vector<double>> grads;
    for (std::vector<int> labels : {std::vector<int>{0, 1}, std::vector<int>{2, 2}}) {
        Tape<double> tape;
        D sw = tape.watch(D(Shape{2, 3}, sl));
        auto parts = kd_loss<double>({sw}, {D(Shape{2, 3}, tl)}, labels, lc);
        grads.push_back(tape.backward(parts.total).at(sw.node()).data());
    }
    bool label_free = grads[0] == grads[1];

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "mean acc tna %.4f >= kd+ce %.4f >= kd %.4f; label-free %s",
                  tna_mean, kdce_mean, kd_mean, label_free ? "yes" : "NO");
    detail = buf;
    return tna_mean >= kdce_mean - 0.005 && kdce_mean >= kd_mean - 0.005 &&
           label_free;
}

// ---- criterion 8: byte-identical reruns, including the compression switch --

bool determinism(std::string& detail) {
    auto run = [&](const std::string& name) {
        TrainConfig cfg = desk_config(name);
        cfg.arch = "256FC-128FC-Out"; // middle layer is compressible
        cfg.mode = TrainMode::Tna;
        cfg.n_networks = 2;
        cfg.epochs = 8;
        cfg.ternary.enabled = true;
        cfg.ternary.policy.start_epoch = 5;
        train(cfg, load_dataset(cfg, true));
        return cfg.out_dir;
    };
    std::string a = run("det_a"), b = run("det_b");
    bool metrics_same = slurp(a + "/metrics.csv") == slurp(b + "/metrics.csv");
    bool ckpt_same = slurp(a + "/checkpoint_final.bin") ==
                     slurp(b + "/checkpoint_final.bin");
    // the hand-off must actually have happened inside the compared window
    std::ifstream mf(a + "/metrics.csv");
    std::string csv((std::istreambuf_iterator<char>(mf)), {});
    bool switched = csv.find(",1,0\n") != std::string::npos; // ternary_active=1
    detail = std::string("metrics ") + (metrics_same ? "identical" : "DIFFER") +
             ", checkpoint " + (ckpt_same ? "identical" : "DIFFER") +
             ", hand-off " + (switched ? "active" : "MISSING");
    return metrics_same && ckpt_same && switched;
}

// ---- criterion 9: persistence formats --------------------------------------

bool persistence(std::string& detail) {
    fs::path dir = g_scratch / "persist";
    fs::create_directories(dir);

    // checkpoint round trip on the determinism run's artifact
    std::string src = (g_scratch / "det_a" / "checkpoint_final.bin").string();
    Checkpoint cp = load_checkpoint(src);
    std::string copy = (dir / "copy.bin").string();
    save_checkpoint(copy, cp);
    if (slurp(src) != slurp(copy)) {
        detail = "round trip not byte-identical";
        return false;
    }

    // the quantized layer payload must be at most a twelfth of f32
    bool saw_ternary = false;
    for (const CheckpointEntry& e : cp.entries) {
        if (e.dtype != kDtypeTernary2Bit) continue;
        saw_ternary = true;
        size_t packed = (e.values.size() + 3) / 4;
        if (packed * 12 > e.values.size() * 4) {
            detail = "ternary payload too large";
            return false;
        }
    }
    if (!saw_ternary) {
        detail = "no ternary entry to measure";
        return false;
    }

    // magic rejection
    auto bytes = slurp(copy);
    bytes[0] = 'X';
    std::ofstream((dir / "bad.bin").string(), std::ios::binary)
        .write(bytes.data(), bytes.size());
    try {
        load_checkpoint((dir / "bad.bin").string());
        detail = "bad magic accepted";
        return false;
    } catch (const FormatError&) {
    }

    // IDX round trip + magic rejection
    std::mt19937_64 rng(31);
    std::vector<std::uint8_t> px(3 * 4 * 4);
    for (auto& p : px) p = static_cast<std::uint8_t>(rng());
    std::vector<std::uint8_t> lb = {0, 1, 2};
    write_idx_images((dir / "img").string(), px, 3, 4, 4);
    write_idx_labels((dir / "lab").string(), lb);
    DatasetHandle d = load_idx((dir / "img").string(), (dir / "lab").string());
    for (size_t i = 0; i < px.size(); ++i)
        if (d.samples[i] != static_cast<float>(px[i]) / 255.0f) {
            detail = "idx pixel mismatch";
            return false;
        }
    if (d.labels != lb) {
        detail = "idx label mismatch";
        return false;
    }
    try {
        load_idx((dir / "lab").string(), (dir / "lab").string());
        detail = "idx magic accepted";
        return false;
    } catch (const FormatError&) {
    }

    // CIFAR record round trip
    std::vector<std::uint8_t> rec(3073);
    rec[0] = 7;
    for (size_t i = 1; i < rec.size(); ++i)
        rec[i] = static_cast<std::uint8_t>(rng());
    std::ofstream((dir / "batch.bin").string(), std::ios::binary)
        .write(reinterpret_cast<const char*>(rec.data()), rec.size());
    DatasetHandle c10 = load_cifar10({(dir / "batch.bin").string()});
    if (c10.labels != std::vector<std::uint8_t>{7} ||
        c10.samples[0] != static_cast<float>(rec[1]) / 255.0f) {
        detail = "cifar record mismatch";
        return false;
    }
    try {
        load_cifar10({(dir / "img").string()}); // wrong record size
        detail = "cifar size accepted";
        return false;
    } catch (const FormatError&) {
    }
    return true;
}

} // namespace

int main() {
    g_scratch = fs::temp_directory_path() /
                ("tna_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_scratch);

    criterion(1, "lif gradient oracle", lif_gradient_oracle);
    criterion(2, "finite-difference suite", finite_difference_suite);
    criterion(3, "equation hand cases", equation_hand_cases);
    criterion(4, "ternary compliance", ternary_compliance);
    criterion(5, "desk-scale learning", desk_scale_learning);
    criterion(6, "co-training trend", tna_directional_trend);
    criterion(7, "distillation ordering", kd_ordering);
    criterion(8, "determinism", determinism);
    criterion(9, "persistence", persistence);

    fs::remove_all(g_scratch);
    std::printf("%d of 9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
