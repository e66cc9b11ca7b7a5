// Acceptance gate: one line per criterion, [PASS]/[FAIL] with the measured
// values, nonzero exit if anything failed. Criteria run in order and share
// trained checkpoints, so the whole gate stays a single short sitting.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maskmix/autograd.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/face_model.hpp"
#include "maskmix/losses.hpp"
#include "maskmix/mask_network.hpp"
#include "maskmix/metrics.hpp"
#include "maskmix/reenact.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/serialize.hpp"
#include "maskmix/style_space.hpp"
#include "maskmix/surrogate_world.hpp"
#include "maskmix/tensor.hpp"
#include "maskmix/trainer.hpp"
#include "../oracles.hpp"

using namespace maskmix;

namespace {

constexpr std::uint64_t kWorldSeed = 7;
constexpr std::uint64_t kTrainSeed = 3;
constexpr std::uint64_t kEvalSeed = 11;
constexpr std::uint64_t kBasisSeed = 5;

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(4);
    ss << x;
    return ss.str();
}

oracle::Mat to_mat(const Tensor& t) {
    oracle::Mat m(t.rows, oracle::Vec(t.cols));
    for (std::size_t i = 0; i < t.rows; ++i)
        for (std::size_t j = 0; j < t.cols; ++j) m[i][j] = t(i, j);
    return m;
}

oracle::Vec to_vec(const Tensor& t) { return oracle::Vec(t.data.begin(), t.data.end()); }

Tensor gaussian_vec(std::mt19937_64& gen, std::size_t n, double sigma = 1.0) {
    std::normal_distribution<double> d(0.0, sigma);
    Tensor t(n, 1);
    for (double& x : t.data) x = d(gen);
    return t;
}

oracle::Vec oracle_mask(const MaskNetworkParams& params, const StyleLayout& layout,
                        const oracle::Vec& delta_full) {
    oracle::Vec out;
    std::size_t which = 0;
    for (std::size_t pos : layout.active_layers) {
        const MaskSubNetParams& sub = params.subnets[which++];
        oracle::Vec d(layout.layers[pos].channels);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = delta_full[layout.offsets[pos] + j];
        oracle::Vec m = oracle::mask_layer(d, to_mat(sub.W1), to_vec(sub.b1), to_mat(sub.W2),
                                           to_vec(sub.b2));
        out.insert(out.end(), m.begin(), m.end());
    }
    return out;
}

TrainConfig desk_config() {
    TrainConfig cfg;
    apply_desk_preset(cfg);
    cfg.seed = kTrainSeed;
    cfg.log_every = 0;
    cfg.checkpoint_every = 0;
    return cfg;
}

struct Gate {
    int failures = 0;
    void report(int index, const std::string& name, bool pass, const std::string& detail) {
        std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    void fail(int index, const std::string& name, const std::exception& e) {
        report(index, name, false, std::string("exception: ") + e.what());
    }
};

// 1. Analytic gradients of the full training objective against central
// differences, every mask parameter, ten random parameter settings.
void criterion_gradients(Gate& gate, const SurrogateWorld& world) {
    const char* name = "gradient integrity";
    try {
        Stopwatch watch;
        const LossWeights weights{1.0, 1.0};
        StyleCode ss = sample_code(world, 9001);
        StyleCode st = sample_code(world, 9002);
        StyleCode st2 = sample_code(world, 9003);

        double max_rel = 0.0;
        std::size_t checked = 0;
        bool ok = true;
        for (int point = 0; point < 10; ++point) {
            MaskNetworkParams params = init_mask_network(world.layout, 0, 500 + point);
            std::mt19937_64 noise(1000 + point);
            std::normal_distribution<double> jitter(0.0, 0.3);
            for (Tensor* block : param_blocks(params))
                for (double& w : block->data) w += jitter(noise);

            Tape tape;
            TapedWorld tw = put_on_tape(tape, world);
            TapedMaskNetwork net = put_on_tape(tape, params);
            TapedPairLoss loss = pair_loss(tape, weights, tw, net, ss, st, &st2);
            tape.backward(loss.total);
            std::vector<Var> taped = taped_param_blocks(net);

            const double h = 1e-6;
            std::vector<Tensor*> blocks = param_blocks(params);
            for (std::size_t b = 0; b < blocks.size() && ok; ++b) {
                for (std::size_t k = 0; k < blocks[b]->size(); ++k) {
                    const double keep = blocks[b]->data[k];
                    blocks[b]->data[k] = keep + h;
                    const double hi = pair_loss(weights, world, params, ss, st, &st2).total;
                    blocks[b]->data[k] = keep - h;
                    const double lo = pair_loss(weights, world, params, ss, st, &st2).total;
                    blocks[b]->data[k] = keep;
                    const double fd = (hi - lo) / (2.0 * h);
                    const double an = taped[b].grad()[k];
                    const double abs_err = std::fabs(fd - an);
                    ++checked;
                    if (abs_err <= 1e-8) continue;
                    const double rel = abs_err / std::max(std::fabs(fd), std::fabs(an));
                    max_rel = std::max(max_rel, rel);
                    if (rel > 1e-4) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) break;
        }
        const double elapsed = watch.seconds();
        const bool in_time = elapsed < 60.0;
        gate.report(1, name, ok && in_time,
                    fmt(static_cast<double>(checked)) + " gradients over 10 parameter points, " +
                        "max rel err above floor " + fmt(max_rel) + ", " + fmt(elapsed) +
                        " s (budget 60 s)");
    } catch (const std::exception& e) {
        gate.fail(1, name, e);
    }
}

// 2. Brute-force formula oracles: mix and slice exact, the linear-algebra
// paths within 1e-12, 100 random inputs each.
void criterion_oracles(Gate& gate, const SurrogateWorld& world) {
    const char* name = "formula oracles";
    try {
        const StyleLayout& layout = world.layout;
        MaskNetworkParams params = init_mask_network(layout, 0, 321);
        std::mt19937_64 noise(322);
        std::normal_distribution<double> jitter(0.0, 0.3);
        for (Tensor* block : param_blocks(params))
            for (double& w : block->data) w += jitter(noise);
        MorphableBasis basis = make_basis(16, 8, 6, 2024);

        std::mt19937_64 gen(47);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> ang(-60.0, 60.0);
        bool mix_ok = true, slice_ok = true;
        double worst_recon = 0.0, worst_gt = 0.0, worst_mask = 0.0, worst_cycle = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            StyleCode s = make_code(layout, gaussian_vec(gen, layout.total_dims));
            StyleCode t = make_code(layout, gaussian_vec(gen, layout.total_dims));
            StyleCode t2 = make_code(layout, gaussian_vec(gen, layout.total_dims));

            Tensor m(layout.active_dims, 1);
            for (double& v : m.data) v = unit(gen);
            StyleCode mixed = mix(s, t, m);
            oracle::Vec mixed_want =
                oracle::mix(to_vec(s.values), to_vec(t.values), to_vec(m), layout.active_to_flat);
            for (std::size_t i = 0; i < layout.total_dims; ++i)
                mix_ok = mix_ok && mixed.values[i] == mixed_want[i];

            for (std::size_t pos = 0; pos < layout.layers.size(); ++pos) {
                Tensor sl = slice(s, pos);
                for (std::size_t j = 0; j < sl.size(); ++j)
                    slice_ok = slice_ok && sl[j] == s.values[layout.offsets[pos] + j];
            }

            Tensor a_s = gaussian_vec(gen, 8);
            Tensor a_e = gaussian_vec(gen, 6);
            Tensor recon = flatten(reconstruct(basis, {a_s, a_e}));
            oracle::Vec recon_want =
                oracle::reconstruct(to_vec(basis.mean_shape), to_mat(basis.shape_basis),
                                    to_mat(basis.expr_basis), to_vec(a_s), to_vec(a_e));
            for (std::size_t i = 0; i < recon_want.size(); ++i)
                worst_recon = std::max(worst_recon, std::fabs(recon[i] - recon_want[i]));

            PoseAngles theta{ang(gen), ang(gen), ang(gen)};
            Tensor gt = flatten(gt_reenacted_shape(basis, a_s, a_e, theta));
            oracle::Vec gt_want = oracle::reenacted_shape(
                to_vec(basis.mean_shape), to_mat(basis.shape_basis), to_mat(basis.expr_basis),
                to_vec(a_s), to_vec(a_e), theta.yaw, theta.pitch, theta.roll);
            for (std::size_t i = 0; i < gt_want.size(); ++i)
                worst_gt = std::max(worst_gt, std::fabs(gt[i] - gt_want[i]));

            Tensor d = delta(s, t).values;
            Tensor mask = mask_forward(params, layout, d);
            oracle::Vec mask_want = oracle_mask(params, layout, to_vec(d));
            for (std::size_t i = 0; i < mask_want.size(); ++i)
                worst_mask = std::max(worst_mask, std::fabs(mask[i] - mask_want[i]));

            StyleCode sr = make_code(layout, gaussian_vec(gen, layout.total_dims));
            auto [c1, c2] = cycle_codes(params, s, sr, t2);
            oracle::Vec d1(layout.total_dims), d2(layout.total_dims);
            for (std::size_t i = 0; i < layout.total_dims; ++i) {
                d1[i] = s.values[i] - t2.values[i];
                d2[i] = sr.values[i] - t2.values[i];
            }
            oracle::Vec w1 = oracle::mix(to_vec(s.values), to_vec(t2.values),
                                         oracle_mask(params, layout, d1), layout.active_to_flat);
            oracle::Vec w2 = oracle::mix(to_vec(sr.values), to_vec(t2.values),
                                         oracle_mask(params, layout, d2), layout.active_to_flat);
            for (std::size_t i = 0; i < layout.total_dims; ++i) {
                worst_cycle = std::max(worst_cycle, std::fabs(c1.values[i] - w1[i]));
                worst_cycle = std::max(worst_cycle, std::fabs(c2.values[i] - w2[i]));
            }
        }
        const double worst_linalg =
            std::max(std::max(worst_recon, worst_gt), std::max(worst_mask, worst_cycle));
        const bool pass = mix_ok && slice_ok && worst_linalg <= 1e-12;
        gate.report(2, name, pass,
                    std::string("mix ") + (mix_ok ? "exact" : "DIFFERS") + ", slice " +
                        (slice_ok ? "exact" : "DIFFERS") + ", worst linear-algebra deviation " +
                        fmt(worst_linalg) + " (tol 1e-12), 100 inputs");
    } catch (const std::exception& e) {
        gate.fail(2, name, e);
    }
}

// 3. Desk-preset training recovers the hidden pose and expression channels.
void criterion_recovery(Gate& gate, const SurrogateWorld& world, const Checkpoint& trained,
                        double train_seconds, bool trained_ok) {
    const char* name = "mask recovery";
    try {
        if (!trained_ok) throw std::runtime_error("training did not complete");
        MaskRecovery rec = mask_recovery(trained, world, 200, kEvalSeed);
        const bool pass = rec.f1 >= 0.95 && train_seconds <= 300.0;
        gate.report(3, name, pass,
                    "F1 " + fmt(rec.f1) + " (need >= 0.95), precision " + fmt(rec.precision) +
                        ", recall " + fmt(rec.recall) + ", 200 pairs, training " +
                        fmt(train_seconds) + " s (budget 300 s)");
    } catch (const std::exception& e) {
        gate.fail(3, name, e);
    }
}

// 4. Transfer quality against the keep-source baseline on 500 pairs.
void criterion_transfer(Gate& gate, const SurrogateWorld& world, const Checkpoint& trained,
                        MetricsReport& trained_report, MetricsReport& baseline_report) {
    const char* name = "reenactment transfer";
    try {
        EvalOptions opt;
        opt.n_pairs = 500;
        opt.seed = kEvalSeed;
        trained_report = evaluate(trained, world, opt);
        EvalOptions zero = opt;
        zero.probe = MaskProbe::zero;
        baseline_report = evaluate(trained, world, zero);

        const bool pose_ok = trained_report.pose_err <= 0.10 * baseline_report.pose_err;
        const bool expr_ok = trained_report.expr_err <= 0.10 * baseline_report.expr_err;
        const bool csim_ok = trained_report.csim >= 0.95;
        const bool nme_ok = trained_report.nme <= 0.20 * baseline_report.nme;
        gate.report(4, name, pose_ok && expr_ok && csim_ok && nme_ok,
                    "pose_err " + fmt(trained_report.pose_err) + " vs baseline " +
                        fmt(baseline_report.pose_err) + ", expr_err " +
                        fmt(trained_report.expr_err) + " vs " + fmt(baseline_report.expr_err) +
                        ", csim " + fmt(trained_report.csim) + " (need >= 0.95), nme " +
                        fmt(trained_report.nme) + " vs " + fmt(baseline_report.nme) +
                        ", 500 pairs");
    } catch (const std::exception& e) {
        gate.fail(4, name, e);
    }
}

// 5. The global-network ablation trains identically and its scores are
// reported next to the per-layer ones; generating the report is the gate.
void criterion_global(Gate& gate, const SurrogateWorld& world, bool per_layer_passed,
                      const MetricsReport& per_layer_report) {
    const char* name = "per-layer vs global report";
    try {
        TrainConfig cfg = desk_config();
        cfg.per_layer_network = false;
        Checkpoint global = train(cfg, world);
        MaskRecovery rec = mask_recovery(global, world, 200, kEvalSeed);
        EvalOptions opt;
        opt.n_pairs = 500;
        opt.seed = kEvalSeed;
        MetricsReport rep = evaluate(global, world, opt);
        gate.report(5, name, per_layer_passed,
                    "global F1 " + fmt(rec.f1) + " nme " + fmt(rep.nme) + " vs per-layer F1 " +
                        fmt(per_layer_report.mask_recovery.f1) + " nme " +
                        fmt(per_layer_report.nme) + " (ordering reported, not gated)");
    } catch (const std::exception& e) {
        gate.fail(5, name, e);
    }
}

// 6. Cycle ablation: the with-cycle run may not trail the without-cycle run
// on pose transfer by more than 10%.
void criterion_cycle(Gate& gate, const SurrogateWorld& world,
                     const MetricsReport& with_cycle_report) {
    const char* name = "cycle ablation";
    try {
        TrainConfig cfg = desk_config();
        cfg.cycle_enabled = false;
        Checkpoint without = train(cfg, world);
        EvalOptions opt;
        opt.n_pairs = 500;
        opt.seed = kEvalSeed;
        MetricsReport rep = evaluate(without, world, opt);
        const bool pass = with_cycle_report.pose_err <= 1.1 * rep.pose_err;
        gate.report(6, name, pass,
                    "with-cycle pose_err " + fmt(with_cycle_report.pose_err) +
                        ", without-cycle " + fmt(rep.pose_err) + " (need <= 1.1x), 500 pairs");
    } catch (const std::exception& e) {
        gate.fail(6, name, e);
    }
}

// 7. Entangled-basis ablation: scrambling the channel alignment must cost at
// least 1.5x in landmark error against the aligned run on the same world.
void criterion_entangled(Gate& gate, const SurrogateWorld& world,
                         const MetricsReport& aligned_report) {
    const char* name = "entangled basis ablation";
    try {
        TrainConfig cfg = desk_config();
        cfg.entangled_basis = true;
        cfg.basis_seed = kBasisSeed;
        Checkpoint rotated = train(cfg, world);
        EvalOptions opt;
        opt.n_pairs = 500;
        opt.seed = kEvalSeed;
        MetricsReport rep = evaluate(rotated, world, opt);
        const bool pass = rep.nme >= 1.5 * aligned_report.nme;
        gate.report(7, name, pass,
                    "entangled nme " + fmt(rep.nme) + ", aligned nme " + fmt(aligned_report.nme) +
                        " (need >= 1.5x), same world and seed");
    } catch (const std::exception& e) {
        gate.fail(7, name, e);
    }
}

// 8. Metric self-consistency: degenerate inputs with known answers.
void criterion_metrics(Gate& gate, const SurrogateWorld& world, const Checkpoint& any_checkpoint) {
    const char* name = "metric self-consistency";
    try {
        std::mt19937_64 gen(88);
        std::normal_distribution<double> d(0.0, 1.0);
        std::vector<Tensor> cloud;
        for (int i = 0; i < 40; ++i) {
            Tensor v(6, 1);
            for (double& x : v.data) x = d(gen);
            cloud.push_back(v);
        }
        const double self_dist = frechet_distance(cloud, cloud);

        const double s = 1.0 / std::sqrt(2.0);
        std::vector<Tensor> a = {Tensor::column({-s}), Tensor::column({s})};
        std::vector<Tensor> b = {Tensor::column({1.0 - s}), Tensor::column({1.0 + s})};
        const double one_d = frechet_distance(a, b);  // closed form gives exactly 1

        EvalOptions copy_all;
        copy_all.n_pairs = 50;
        copy_all.seed = kEvalSeed;
        copy_all.probe = MaskProbe::one;
        MetricsReport copy_rep = evaluate(any_checkpoint, world, copy_all);

        EvalOptions keep_self;
        keep_self.n_pairs = 50;
        keep_self.seed = kEvalSeed;
        keep_self.probe = MaskProbe::zero;
        keep_self.self_pairs = true;
        MetricsReport keep_rep = evaluate(any_checkpoint, world, keep_self);

        const bool pass = self_dist <= 1e-8 && std::fabs(one_d - 1.0) <= 1e-8 &&
                          copy_rep.pose_err <= 1e-10 && copy_rep.expr_err <= 1e-10 &&
                          keep_rep.csim == 1.0;
        gate.report(8, name, pass,
                    "frechet(A,A) " + fmt(self_dist) + ", 1-D closed-form err " +
                        fmt(std::fabs(one_d - 1.0)) + ", copy-probe pose_err " +
                        fmt(copy_rep.pose_err) + " expr_err " + fmt(copy_rep.expr_err) +
                        ", keep-probe self csim " + fmt(keep_rep.csim));
    } catch (const std::exception& e) {
        gate.fail(8, name, e);
    }
}

// 9. Bitwise determinism of full runs and of a split-and-resume run.
void criterion_determinism(Gate& gate, const SurrogateWorld& world, const Checkpoint& first_run,
                           bool first_ok) {
    const char* name = "determinism and resume";
    try {
        if (!first_ok) throw std::runtime_error("reference training run did not complete");
        Checkpoint second_run = train(desk_config(), world);
        const bool runs_equal =
            first_run.digest == second_run.digest &&
            checkpoint_to_json(first_run).dump(2) == checkpoint_to_json(second_run).dump(2);

        EvalOptions opt;
        opt.n_pairs = 100;
        opt.seed = kEvalSeed;
        const std::string report_a = report_to_json(evaluate(first_run, world, opt)).dump(2);
        const std::string report_b = report_to_json(evaluate(second_run, world, opt)).dump(2);
        const bool reports_equal = report_a == report_b;

        TrainConfig cfg100 = desk_config();
        cfg100.iterations = 100;
        TrainConfig cfg50 = cfg100;
        cfg50.iterations = 50;
        Checkpoint straight = train(cfg100, world);
        Checkpoint half = train(cfg50, world);
        Checkpoint resumed = resume(half, cfg100, world);
        const bool resume_equal =
            straight.digest == resumed.digest &&
            checkpoint_to_json(straight).dump(2) == checkpoint_to_json(resumed).dump(2);

        gate.report(9, name, runs_equal && reports_equal && resume_equal,
                    std::string("repeat runs ") + (runs_equal ? "bitwise equal" : "DIFFER") +
                        ", reports " + (reports_equal ? "byte identical" : "DIFFER") +
                        ", 50+50 resume vs 100 " + (resume_equal ? "bitwise equal" : "DIFFERS"));
    } catch (const std::exception& e) {
        gate.fail(9, name, e);
    }
}

}  // namespace

int main() {
    Gate gate;
    SurrogateWorld world = make_world(builtin_layout("toy"), WorldSizes{}, kWorldSeed);

    criterion_gradients(gate, world);
    criterion_oracles(gate, world);

    Checkpoint trained;
    bool trained_ok = false;
    double train_seconds = 0.0;
    try {
        Stopwatch watch;
        trained = train(desk_config(), world);
        train_seconds = watch.seconds();
        trained_ok = true;
    } catch (const std::exception& e) {
        std::printf("[FAIL] 3 mask recovery: training threw: %s\n", e.what());
        std::printf("[FAIL] 4 reenactment transfer: training threw: %s\n", e.what());
        gate.failures += 2;
    }

    MetricsReport trained_report;
    MetricsReport baseline_report;
    bool transfer_reported = false;
    if (trained_ok) {
        criterion_recovery(gate, world, trained, train_seconds, trained_ok);
        criterion_transfer(gate, world, trained, trained_report, baseline_report);
        transfer_reported = trained_report.n_pairs == 500;
    }

    const bool per_layer_passed = trained_ok && transfer_reported &&
                                  trained_report.mask_recovery.f1 >= 0.95;
    criterion_global(gate, world, per_layer_passed, trained_report);
    criterion_cycle(gate, world, trained_report);
    criterion_entangled(gate, world, trained_report);
    if (trained_ok) {
        criterion_metrics(gate, world, trained);
    } else {
        std::printf("[FAIL] 8 metric self-consistency: no checkpoint available\n");
        ++gate.failures;
    }
    criterion_determinism(gate, world, trained, trained_ok);

    if (gate.failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", gate.failures);
    return 1;
}
