#include "maskmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "maskmix/digest.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/face_model.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor_ops.hpp"

namespace maskmix {

namespace {

void check_artifacts(const Checkpoint& checkpoint, const SurrogateWorld& world) {
    if (checkpoint.world_digest != world.digest)
        throw MismatchError("checkpoint was trained against world " +
                            to_hex(checkpoint.world_digest) + " but got " + to_hex(world.digest));
    if (checkpoint_digest(checkpoint) != checkpoint.digest)
        throw MismatchError("checkpoint content does not match its stored digest " +
                            to_hex(checkpoint.digest));
    if (checkpoint.params.layout_hash != world.layout.hash)
        throw MismatchError("checkpoint network and world disagree on the style layout");
}

struct EvalPair {
    StyleCode source;
    StyleCode target;
};

EvalPair sample_pair(const SurrogateWorld& world, std::uint64_t seed, std::size_t k,
                     bool self_pair) {
    Rng rng(derive_seed(seed, streams::eval_pairs, static_cast<std::uint64_t>(k)));
    StyleCode source = sample_code(world, rng.next_u64());
    StyleCode target = self_pair ? source : sample_code(world, rng.next_u64());
    return {std::move(source), std::move(target)};
}

double mean_abs_pose_diff(const PoseAngles& a, const PoseAngles& b) {
    return (std::abs(a.yaw - b.yaw) + std::abs(a.pitch - b.pitch) + std::abs(a.roll - b.roll)) /
           3.0;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mean_abs_diff");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::abs(a.data[i] - b.data[i]);
    return sum / static_cast<double>(a.data.size());
}

// 100 x mean per-point distance, normalized by the ground-truth bounding-box
// diagonal so the score is invariant to the world's landmark scale.
double nme_percent(const Landmarks3D& got, const Landmarks3D& want) {
    require_same_shape(got.points, want.points, "nme");
    const std::size_t n = want.points.rows;
    double lo[3], hi[3];
    for (std::size_t c = 0; c < 3; ++c) {
        lo[c] = want.points(0, c);
        hi[c] = want.points(0, c);
    }
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], want.points(i, c));
            hi[c] = std::max(hi[c], want.points(i, c));
        }
    double diag_sq = 0.0;
    for (std::size_t c = 0; c < 3; ++c) diag_sq += (hi[c] - lo[c]) * (hi[c] - lo[c]);
    const double diag = std::sqrt(diag_sq);
    if (!(diag > 0.0)) throw NumericError("nme: degenerate ground-truth bounding box");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d_sq = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = got.points(i, c) - want.points(i, c);
            d_sq += d * d;
        }
        sum += std::sqrt(d_sq);
    }
    return 100.0 * (sum / static_cast<double>(n)) / diag;
}

Eigen::MatrixXd stack_rows(const std::vector<Tensor>& feats, std::size_t dim, const char* side) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(feats.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const Tensor& f = feats[i];
        if (f.data.size() != dim)
            throw ShapeError(std::string("frechet_distance: ") + side + " vector " +
                             std::to_string(i) + " has length " + std::to_string(f.data.size()) +
                             ", expected " + std::to_string(dim));
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = f.data[j];
            if (!std::isfinite(v)) throw NumericError("frechet_distance: non-finite feature");
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return x;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    const Eigen::RowVectorXd mu = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mu;
    return (centered.adjoint() * centered) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const std::vector<Tensor>& feats_a, const std::vector<Tensor>& feats_b) {
    if (feats_a.size() < 2 || feats_b.size() < 2)
        throw ShapeError("frechet_distance: need at least two vectors per set");
    const std::size_t dim = feats_a[0].data.size();
    if (dim == 0) throw ShapeError("frechet_distance: empty feature vectors");
    const Eigen::MatrixXd xa = stack_rows(feats_a, dim, "first");
    const Eigen::MatrixXd xb = stack_rows(feats_b, dim, "second");

    const Eigen::RowVectorXd mu_a = xa.colwise().mean();
    const Eigen::RowVectorXd mu_b = xb.colwise().mean();
    const Eigen::MatrixXd cov_a = sample_covariance(xa);
    const Eigen::MatrixXd cov_b = sample_covariance(xb);

    const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
    Eigen::MatrixXd inner = root_a * cov_b * root_a;
    inner = 0.5 * (inner + inner.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
    const double trace_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double dist =
        (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt;
    // Exact-zero and near-zero cases land a rounding ulp below zero.
    return std::max(dist, 0.0);
}

MaskRecovery mask_recovery(const Checkpoint& checkpoint, const SurrogateWorld& world,
                           std::size_t n_pairs, std::uint64_t seed, double threshold) {
    check_artifacts(checkpoint, world);
    if (n_pairs == 0) throw ShapeError("mask_recovery: need at least one pair");
    if (!std::isfinite(threshold)) throw ShapeError("mask_recovery: threshold must be finite");
    const auto rotation = training_rotation(checkpoint.config, world.layout);

    const std::size_t active = world.layout.active_dims;
    std::vector<double> accum(active, 0.0);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        EvalPair p = sample_pair(world, seed, k, false);
        if (rotation) {
            p.source = rotate_active(*rotation, p.source);
            p.target = rotate_active(*rotation, p.target);
        }
        const Tensor m = mask_forward(checkpoint.params, world.layout,
                                      delta(p.source, p.target).values);
        for (std::size_t a = 0; a < active; ++a) accum[a] += m.data[a];
    }
    MaskRecovery out;
    out.threshold = threshold;
    out.mean_mask.resize(active);
    for (std::size_t a = 0; a < active; ++a)
        out.mean_mask[a] = accum[a] / static_cast<double>(n_pairs);

    std::vector<std::size_t> truth = world.partition.pose_channels;
    truth.insert(truth.end(), world.partition.expr_channels.begin(),
                 world.partition.expr_channels.end());
    std::sort(truth.begin(), truth.end());

    for (std::size_t a : semantic_channels(world))
        if (out.mean_mask[a] > threshold) out.predicted.push_back(a);

    std::vector<std::size_t> hit;
    std::set_intersection(out.predicted.begin(), out.predicted.end(), truth.begin(), truth.end(),
                          std::back_inserter(hit));
    const double tp = static_cast<double>(hit.size());
    out.precision = out.predicted.empty() ? 0.0 : tp / static_cast<double>(out.predicted.size());
    out.recall = truth.empty() ? 0.0 : tp / static_cast<double>(truth.size());
    const double pr = out.precision + out.recall;
    out.f1 = pr == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / pr;
    return out;
}

MetricsReport evaluate(const Checkpoint& checkpoint, const SurrogateWorld& world,
                       const EvalOptions& options) {
    check_artifacts(checkpoint, world);
    if (options.n_pairs < 2)
        throw ShapeError("evaluate: need at least two pairs for the Frechet covariance");
    const auto rotation = training_rotation(checkpoint.config, world.layout);
    ReenactOptions ropts;
    ropts.probe = options.probe;
    ropts.rotation = rotation ? &*rotation : nullptr;

    double csim_sum = 0.0, pose_sum = 0.0, expr_sum = 0.0, nme_sum = 0.0;
    std::vector<Tensor> reenacted_feats;
    reenacted_feats.reserve(options.n_pairs);
    for (std::size_t k = 0; k < options.n_pairs; ++k) {
        const EvalPair p = sample_pair(world, options.seed, k, options.self_pairs);
        const ReenactResult r = reenact(world, checkpoint.params, p.source, p.target, ropts);
        csim_sum += cosine_sim(r.source.id_feature, r.output.id_feature);
        pose_sum += mean_abs_pose_diff(r.output.pose, r.target.pose);
        expr_sum += mean_abs_diff(r.output.expr, r.target.expr);
        const Landmarks3D got = landmarks(world, render(world, r.reenacted));
        const Landmarks3D want =
            gt_reenacted_shape(world.basis, r.source.shape, r.target.expr, r.target.pose);
        nme_sum += nme_percent(got, want);
        reenacted_feats.push_back(r.output.id_feature);
    }

    std::vector<Tensor> fresh_feats;
    fresh_feats.reserve(options.n_pairs);
    for (std::size_t k = 0; k < options.n_pairs; ++k) {
        Rng rng(derive_seed(options.seed, streams::eval_fresh, static_cast<std::uint64_t>(k)));
        const StyleCode code = sample_code(world, rng.next_u64());
        fresh_feats.push_back(extract_identity(world, render(world, code)));
    }

    const double n = static_cast<double>(options.n_pairs);
    MetricsReport report;
    report.csim = csim_sum / n;
    report.pose_err = pose_sum / n;
    report.expr_err = expr_sum / n;
    report.nme = nme_sum / n;
    report.frechet = frechet_distance(reenacted_feats, fresh_feats);
    report.mask_recovery = mask_recovery(checkpoint, world, options.n_pairs, options.seed);
    report.n_pairs = options.n_pairs;
    report.seed = options.seed;
    report.probe = options.probe;
    report.self_pairs = options.self_pairs;
    report.world_digest = world.digest;
    report.checkpoint_digest = checkpoint.digest;
    report.conventions = {
        "pose_err: mean absolute yaw/pitch/roll difference vs target, degrees",
        "expr_err: mean absolute expression-coefficient difference vs target",
        "nme: 100 x mean landmark distance over the ground-truth bounding-box diagonal",
        "frechet: Gaussian Frechet distance with unbiased covariances, reenacted vs fresh "
        "identity features",
        "mask_recovery: pair-mean mask thresholded on semantically live channels vs pose plus "
        "expression",
    };
    return report;
}

}  // namespace maskmix
