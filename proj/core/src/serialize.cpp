#include "maskmix/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maskmix/digest.hpp"
#include "maskmix/errors.hpp"

namespace maskmix {

namespace {

const Json& need(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ShapeError(std::string("missing field '") + key + "'");
    return *it;
}

std::uint64_t get_u64(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ShapeError(std::string("field '") + key + "' must be a non-negative integer");
}

std::size_t get_size(const Json& j, const char* key) {
    return static_cast<std::size_t>(get_u64(j, key));
}

int get_int(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ShapeError(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

double get_f64(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_number()) throw ShapeError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

bool get_bool(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_boolean()) throw ShapeError(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
}

std::string get_str(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_string()) throw ShapeError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t parse_hex64(const std::string& s, const char* key) {
    if (s.size() != 16)
        throw ShapeError(std::string("field '") + key + "' must be 16 lowercase hex digits");
    std::uint64_t out = 0;
    for (char c : s) {
        int digit;
        if (c >= '0' && c <= '9')
            digit = c - '0';
        else if (c >= 'a' && c <= 'f')
            digit = c - 'a' + 10;
        else
            throw ShapeError(std::string("field '") + key + "' must be 16 lowercase hex digits");
        out = (out << 4) | static_cast<std::uint64_t>(digit);
    }
    return out;
}

std::uint64_t get_hex(const Json& j, const char* key) {
    return parse_hex64(get_str(j, key), key);
}

void check_major_version(const std::string& version) {
    const auto dot = version.find('.');
    if (dot == std::string::npos || version.substr(0, dot) != "1")
        throw MismatchError("unsupported format version '" + version + "'; this build reads 1.x");
}

void check_format(const Json& j, const char* kind) {
    if (!j.is_object()) throw ShapeError("artifact: expected a JSON object");
    check_major_version(get_str(j, "format_version"));
    const std::string found = get_str(j, "kind");
    if (found != kind)
        throw MismatchError(std::string("expected a '") + kind + "' artifact, found '" + found +
                            "'");
}

std::vector<std::size_t> indices_from_json(const Json& j, const char* what) {
    if (!j.is_array()) throw ShapeError(std::string(what) + ": expected an array");
    std::vector<std::size_t> out;
    out.reserve(j.size());
    for (const Json& v : j) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ShapeError(std::string(what) + ": indices must be non-negative integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

Json sizes_to_json(const WorldSizes& s) {
    Json j;
    j["landmark_count"] = s.landmark_count;
    j["shape_dim"] = s.shape_dim;
    j["expr_dim"] = s.expr_dim;
    j["id_feature_dim"] = s.id_feature_dim;
    j["pose_scale"] = s.pose_scale;
    j["pose_block"] = s.pose_block;
    j["expr_block"] = s.expr_block;
    j["id_block"] = s.id_block;
    return j;
}

WorldSizes sizes_from_json(const Json& j) {
    WorldSizes s;
    s.landmark_count = get_size(j, "landmark_count");
    s.shape_dim = get_size(j, "shape_dim");
    s.expr_dim = get_size(j, "expr_dim");
    s.id_feature_dim = get_size(j, "id_feature_dim");
    s.pose_scale = get_f64(j, "pose_scale");
    s.pose_block = get_size(j, "pose_block");
    s.expr_block = get_size(j, "expr_block");
    s.id_block = get_size(j, "id_block");
    return s;
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const char* what) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw ShapeError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
}

std::string csv_escape_free(const std::string& s, const char* what) {
    if (s.find_first_of(",\"\n\r") != std::string::npos)
        throw ShapeError(std::string(what) + ": value would need CSV quoting: '" + s + "'");
    return s;
}

}  // namespace

const char* probe_name(MaskProbe probe) {
    switch (probe) {
        case MaskProbe::none: return "none";
        case MaskProbe::zero: return "zero";
        case MaskProbe::one: return "one";
    }
    throw ShapeError("probe_name: unknown probe value");
}

MaskProbe probe_from_name(const std::string& name) {
    if (name == "none") return MaskProbe::none;
    if (name == "zero") return MaskProbe::zero;
    if (name == "one") return MaskProbe::one;
    throw ShapeError("unknown mask probe '" + name + "'; expected none, zero, or one");
}

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json tensor_to_json(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) throw NumericError("tensor_to_json: non-finite value");
    if (t.cols == 1) return Json(t.data);
    Json rows = Json::array();
    for (std::size_t i = 0; i < t.rows; ++i) {
        Json row = Json::array();
        for (std::size_t c = 0; c < t.cols; ++c) row.push_back(t(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Tensor tensor_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw ShapeError(std::string(what) + ": expected a non-empty array");
    auto number = [what](const Json& v) {
        if (!v.is_number()) throw ShapeError(std::string(what) + ": expected numbers");
        return v.get<double>();
    };
    if (!j[0].is_array()) {
        Tensor t(j.size(), 1);
        for (std::size_t i = 0; i < j.size(); ++i) t.data[i] = number(j[i]);
        return t;
    }
    const std::size_t cols = j[0].size();
    if (cols == 0) throw ShapeError(std::string(what) + ": empty matrix row");
    Tensor t(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& row = j[i];
        if (!row.is_array() || row.size() != cols)
            throw ShapeError(std::string(what) + ": ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) t(i, c) = number(row[c]);
    }
    return t;
}

Json config_to_json(const TrainConfig& config) {
    Json j;
    j["iterations"] = config.iterations;
    j["batch_size"] = config.batch_size;
    j["learning_rate"] = config.learning_rate;
    j["hidden_width"] = config.hidden_width;
    j["weights"] = Json{{"lambda_x", config.weights.lambda_x},
                        {"lambda_id", config.weights.lambda_id}};
    j["cycle_enabled"] = config.cycle_enabled;
    j["per_layer_network"] = config.per_layer_network;
    j["seed"] = config.seed;
    j["layout_name"] = config.layout_name;
    j["world"] = sizes_to_json(config.world);
    j["world_path"] = config.world_path;
    j["entangled_basis"] = config.entangled_basis;
    j["basis_seed"] = config.basis_seed;
    j["log_every"] = config.log_every;
    j["checkpoint_every"] = config.checkpoint_every;
    j["desk_preset"] = config.desk_preset;
    return j;
}

TrainConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ShapeError("config: expected a JSON object");
    reject_unknown_keys(j,
                        {"format_version", "iterations", "batch_size", "learning_rate",
                         "hidden_width", "weights", "cycle_enabled", "per_layer_network", "seed",
                         "layout_name", "world", "world_path", "entangled_basis", "basis_seed",
                         "log_every", "checkpoint_every", "desk_preset"},
                        "config");
    if (j.contains("format_version")) check_major_version(get_str(j, "format_version"));
    TrainConfig c;
    // The preset seeds the defaults before explicit keys are read, so a
    // config can name the preset and still pin individual fields.
    if (j.contains("desk_preset") && get_bool(j, "desk_preset")) {
        apply_desk_preset(c);
        c.desk_preset = true;
    }
    if (j.contains("iterations")) c.iterations = get_u64(j, "iterations");
    if (j.contains("batch_size")) c.batch_size = get_size(j, "batch_size");
    if (j.contains("learning_rate")) c.learning_rate = get_f64(j, "learning_rate");
    if (j.contains("hidden_width")) c.hidden_width = get_size(j, "hidden_width");
    if (j.contains("weights")) {
        const Json& w = need(j, "weights");
        if (!w.is_object()) throw ShapeError("config: 'weights' must be an object");
        reject_unknown_keys(w, {"lambda_x", "lambda_id"}, "config weights");
        if (w.contains("lambda_x")) c.weights.lambda_x = get_f64(w, "lambda_x");
        if (w.contains("lambda_id")) c.weights.lambda_id = get_f64(w, "lambda_id");
    }
    if (j.contains("cycle_enabled")) c.cycle_enabled = get_bool(j, "cycle_enabled");
    if (j.contains("per_layer_network")) c.per_layer_network = get_bool(j, "per_layer_network");
    if (j.contains("seed")) c.seed = get_u64(j, "seed");
    if (j.contains("layout_name")) c.layout_name = get_str(j, "layout_name");
    if (j.contains("world")) {
        const Json& w = need(j, "world");
        if (!w.is_object()) throw ShapeError("config: 'world' must be an object");
        reject_unknown_keys(w,
                            {"landmark_count", "shape_dim", "expr_dim", "id_feature_dim",
                             "pose_scale", "pose_block", "expr_block", "id_block"},
                            "config world");
        WorldSizes defaults;
        c.world = defaults;
        if (w.contains("landmark_count")) c.world.landmark_count = get_size(w, "landmark_count");
        if (w.contains("shape_dim")) c.world.shape_dim = get_size(w, "shape_dim");
        if (w.contains("expr_dim")) c.world.expr_dim = get_size(w, "expr_dim");
        if (w.contains("id_feature_dim")) c.world.id_feature_dim = get_size(w, "id_feature_dim");
        if (w.contains("pose_scale")) c.world.pose_scale = get_f64(w, "pose_scale");
        if (w.contains("pose_block")) c.world.pose_block = get_size(w, "pose_block");
        if (w.contains("expr_block")) c.world.expr_block = get_size(w, "expr_block");
        if (w.contains("id_block")) c.world.id_block = get_size(w, "id_block");
    }
    if (j.contains("world_path")) c.world_path = get_str(j, "world_path");
    if (j.contains("entangled_basis")) c.entangled_basis = get_bool(j, "entangled_basis");
    if (j.contains("basis_seed")) c.basis_seed = get_u64(j, "basis_seed");
    if (j.contains("log_every")) c.log_every = get_u64(j, "log_every");
    if (j.contains("checkpoint_every")) c.checkpoint_every = get_u64(j, "checkpoint_every");
    if (j.contains("desk_preset")) c.desk_preset = get_bool(j, "desk_preset");
    return c;
}

Json world_to_json(const SurrogateWorld& world) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "world";
    j["layout_name"] = world.layout.name;
    j["layout_hash"] = to_hex(world.layout.hash);
    j["seed"] = world.seed;
    j["sizes"] = sizes_to_json(world.sizes);
    j["partition"] = Json{{"pose_channels", world.partition.pose_channels},
                          {"expr_channels", world.partition.expr_channels},
                          {"id_channels", world.partition.id_channels},
                          {"nuisance_channels", world.partition.nuisance_channels}};
    Json blocks = Json::array();
    for (const Tensor& b : world.render_blocks) blocks.push_back(tensor_to_json(b));
    j["render_blocks"] = std::move(blocks);
    j["pose_map"] = tensor_to_json(world.pose_map);
    j["expr_map"] = tensor_to_json(world.expr_map);
    j["shape_map"] = tensor_to_json(world.shape_map);
    j["id_map"] = tensor_to_json(world.id_map);
    j["basis"] = Json{{"landmark_count", world.basis.landmark_count},
                      {"mean_shape", tensor_to_json(world.basis.mean_shape)},
                      {"shape_basis", tensor_to_json(world.basis.shape_basis)},
                      {"expr_basis", tensor_to_json(world.basis.expr_basis)}};
    j["digest"] = to_hex(world.digest);
    return j;
}

SurrogateWorld world_from_json(const Json& j) {
    check_format(j, "world");
    SurrogateWorld w;
    w.layout = builtin_layout(get_str(j, "layout_name"));
    if (w.layout.hash != get_hex(j, "layout_hash"))
        throw MismatchError("world layout '" + w.layout.name +
                            "' does not match the stored layout hash");
    w.seed = get_u64(j, "seed");
    w.sizes = sizes_from_json(need(j, "sizes"));
    w.pose_scale = w.sizes.pose_scale;
    const Json& part = need(j, "partition");
    w.partition.pose_channels = indices_from_json(need(part, "pose_channels"), "pose_channels");
    w.partition.expr_channels = indices_from_json(need(part, "expr_channels"), "expr_channels");
    w.partition.id_channels = indices_from_json(need(part, "id_channels"), "id_channels");
    w.partition.nuisance_channels =
        indices_from_json(need(part, "nuisance_channels"), "nuisance_channels");
    const Json& blocks = need(j, "render_blocks");
    if (!blocks.is_array()) throw ShapeError("render_blocks: expected an array");
    for (const Json& b : blocks) w.render_blocks.push_back(tensor_from_json(b, "render_block"));
    w.pose_map = tensor_from_json(need(j, "pose_map"), "pose_map");
    w.expr_map = tensor_from_json(need(j, "expr_map"), "expr_map");
    w.shape_map = tensor_from_json(need(j, "shape_map"), "shape_map");
    w.id_map = tensor_from_json(need(j, "id_map"), "id_map");
    const Json& basis = need(j, "basis");
    w.basis.landmark_count = get_size(basis, "landmark_count");
    w.basis.mean_shape = tensor_from_json(need(basis, "mean_shape"), "mean_shape");
    w.basis.shape_basis = tensor_from_json(need(basis, "shape_basis"), "shape_basis");
    w.basis.expr_basis = tensor_from_json(need(basis, "expr_basis"), "expr_basis");
    w.digest = get_hex(j, "digest");
    if (world_digest(w) != w.digest)
        throw MismatchError("world content does not match its stored digest " + to_hex(w.digest));
    check_world(w);
    return w;
}

Json code_to_json(const StyleCode& code) {
    if (code.layout == nullptr) throw ShapeError("code_to_json: code has no layout");
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "code";
    j["layout_name"] = code.layout->name;
    j["layout_hash"] = to_hex(code.layout->hash);
    j["values"] = tensor_to_json(code.values);
    return j;
}

StyleCode code_from_json(const Json& j, const StyleLayout& layout) {
    check_format(j, "code");
    if (get_str(j, "layout_name") != layout.name || get_hex(j, "layout_hash") != layout.hash)
        throw MismatchError("code was written for layout '" + get_str(j, "layout_name") +
                            "', expected '" + layout.name + "'");
    Tensor values = tensor_from_json(need(j, "values"), "values");
    if (!values.is_vector() || values.rows != layout.total_dims)
        throw ShapeError("code values must be a vector of length " +
                         std::to_string(layout.total_dims));
    return make_code(layout, std::move(values));
}

Json checkpoint_to_json(const Checkpoint& checkpoint) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "checkpoint";
    j["config"] = config_to_json(checkpoint.config);
    j["world_digest"] = to_hex(checkpoint.world_digest);
    j["iteration"] = checkpoint.iteration;
    Json subnets = Json::array();
    for (const MaskSubNetParams& sub : checkpoint.params.subnets)
        subnets.push_back(Json{{"layer_s_index", sub.layer_s_index},
                               {"W1", tensor_to_json(sub.W1)},
                               {"b1", tensor_to_json(sub.b1)},
                               {"W2", tensor_to_json(sub.W2)},
                               {"b2", tensor_to_json(sub.b2)}});
    j["params"] = Json{{"layout_hash", to_hex(checkpoint.params.layout_hash)},
                       {"per_layer", checkpoint.params.per_layer},
                       {"hidden_width", checkpoint.params.hidden_width},
                       {"subnets", std::move(subnets)}};
    Json first = Json::array();
    for (const Tensor& t : checkpoint.adam.first_moment) first.push_back(tensor_to_json(t));
    Json second = Json::array();
    for (const Tensor& t : checkpoint.adam.second_moment) second.push_back(tensor_to_json(t));
    j["adam"] = Json{{"step_count", checkpoint.adam.step_count},
                     {"beta1", checkpoint.adam.beta1},
                     {"beta2", checkpoint.adam.beta2},
                     {"epsilon", checkpoint.adam.epsilon},
                     {"learning_rate", checkpoint.adam.learning_rate},
                     {"first_moment", std::move(first)},
                     {"second_moment", std::move(second)}};
    j["digest"] = to_hex(checkpoint.digest);
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    check_format(j, "checkpoint");
    Checkpoint c;
    c.config = config_from_json(need(j, "config"));
    c.world_digest = get_hex(j, "world_digest");
    c.iteration = get_u64(j, "iteration");
    const Json& params = need(j, "params");
    c.params.layout_hash = get_hex(params, "layout_hash");
    c.params.per_layer = get_bool(params, "per_layer");
    c.params.hidden_width = get_size(params, "hidden_width");
    const Json& subnets = need(params, "subnets");
    if (!subnets.is_array()) throw ShapeError("params subnets: expected an array");
    for (const Json& s : subnets) {
        MaskSubNetParams sub;
        sub.layer_s_index = get_int(s, "layer_s_index");
        sub.W1 = tensor_from_json(need(s, "W1"), "W1");
        sub.b1 = tensor_from_json(need(s, "b1"), "b1");
        sub.W2 = tensor_from_json(need(s, "W2"), "W2");
        sub.b2 = tensor_from_json(need(s, "b2"), "b2");
        c.params.subnets.push_back(std::move(sub));
    }
    const Json& adam = need(j, "adam");
    c.adam.step_count = get_size(adam, "step_count");
    c.adam.beta1 = get_f64(adam, "beta1");
    c.adam.beta2 = get_f64(adam, "beta2");
    c.adam.epsilon = get_f64(adam, "epsilon");
    c.adam.learning_rate = get_f64(adam, "learning_rate");
    const Json& first = need(adam, "first_moment");
    const Json& second = need(adam, "second_moment");
    if (!first.is_array() || !second.is_array())
        throw ShapeError("adam moments: expected arrays");
    for (const Json& t : first) c.adam.first_moment.push_back(tensor_from_json(t, "first_moment"));
    for (const Json& t : second)
        c.adam.second_moment.push_back(tensor_from_json(t, "second_moment"));
    c.digest = get_hex(j, "digest");
    if (checkpoint_digest(c) != c.digest)
        throw MismatchError("checkpoint content does not match its stored digest " +
                            to_hex(c.digest));
    return c;
}

Json report_to_json(const MetricsReport& report) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "report";
    j["csim"] = report.csim;
    j["pose_err"] = report.pose_err;
    j["expr_err"] = report.expr_err;
    j["nme"] = report.nme;
    j["frechet"] = report.frechet;
    j["mask_recovery"] = Json{{"precision", report.mask_recovery.precision},
                              {"recall", report.mask_recovery.recall},
                              {"f1", report.mask_recovery.f1},
                              {"threshold", report.mask_recovery.threshold},
                              {"predicted", report.mask_recovery.predicted},
                              {"mean_mask", report.mask_recovery.mean_mask}};
    j["n_pairs"] = report.n_pairs;
    j["seed"] = report.seed;
    j["probe"] = probe_name(report.probe);
    j["self_pairs"] = report.self_pairs;
    j["world_digest"] = to_hex(report.world_digest);
    j["checkpoint_digest"] = to_hex(report.checkpoint_digest);
    j["conventions"] = report.conventions;
    return j;
}

std::string report_to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "csim,pose_err,expr_err,nme,frechet,mask_precision,mask_recall,mask_f1,"
           "n_pairs,seed,probe,self_pairs,world_digest,checkpoint_digest\n";
    out << format_double(report.csim) << ',' << format_double(report.pose_err) << ','
        << format_double(report.expr_err) << ',' << format_double(report.nme) << ','
        << format_double(report.frechet) << ',' << format_double(report.mask_recovery.precision)
        << ',' << format_double(report.mask_recovery.recall) << ','
        << format_double(report.mask_recovery.f1) << ',' << report.n_pairs << ',' << report.seed
        << ',' << probe_name(report.probe) << ',' << (report.self_pairs ? "true" : "false") << ','
        << to_hex(report.world_digest) << ',' << to_hex(report.checkpoint_digest) << '\n';
    return out.str();
}

std::string report_to_table(const MetricsReport& report) {
    std::ostringstream out;
    auto row = [&out](const std::string& name, const std::string& value) {
        out << name;
        for (std::size_t i = name.size(); i < 20; ++i) out << ' ';
        out << value << '\n';
    };
    row("csim", format_double(report.csim));
    row("pose_err", format_double(report.pose_err));
    row("expr_err", format_double(report.expr_err));
    row("nme", format_double(report.nme));
    row("frechet", format_double(report.frechet));
    row("mask_precision", format_double(report.mask_recovery.precision));
    row("mask_recall", format_double(report.mask_recovery.recall));
    row("mask_f1", format_double(report.mask_recovery.f1));
    row("n_pairs", std::to_string(report.n_pairs));
    row("seed", std::to_string(report.seed));
    row("probe", probe_name(report.probe));
    row("self_pairs", report.self_pairs ? "true" : "false");
    row("world_digest", to_hex(report.world_digest));
    row("checkpoint_digest", to_hex(report.checkpoint_digest));
    return out.str();
}

std::string log_csv_header() {
    return "iteration,shape,identity,reenactment,cycle_shape,cycle_identity,cycle,total,"
           "grad_norm,wall_time_s\n";
}

std::string log_csv_row(const TrainLogRow& row) {
    std::ostringstream out;
    out << row.iteration << ',' << format_double(row.terms.shape) << ','
        << format_double(row.terms.identity) << ',' << format_double(row.terms.reenactment) << ','
        << format_double(row.terms.cycle_shape) << ',' << format_double(row.terms.cycle_identity)
        << ',' << format_double(row.terms.cycle) << ',' << format_double(row.terms.total) << ','
        << format_double(row.grad_norm) << ',' << format_double(row.wall_time_s) << '\n';
    return out.str();
}

std::string inspect_mask_csv(const SurrogateWorld& world, const MaskRecovery& recovery) {
    const StyleLayout& layout = world.layout;
    if (recovery.mean_mask.size() != layout.active_dims)
        throw ShapeError("inspect_mask_csv: mean mask length does not match the layout");
    const std::vector<std::string> labels =
        partition_labels(world.partition, layout.active_dims);
    std::ostringstream out;
    out << "channel,layer_s_index,mean_mask,label\n";
    std::size_t channel = 0;
    for (std::size_t pos : layout.active_layers) {
        const LayerSpec& layer = layout.layers[pos];
        for (std::size_t c = 0; c < layer.channels; ++c, ++channel)
            out << channel << ',' << layer.s_index << ','
                << format_double(recovery.mean_mask[channel]) << ','
                << csv_escape_free(labels[channel], "inspect_mask_csv") << '\n';
    }
    return out.str();
}

Json manifest_to_json(const RunManifest& manifest) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "manifest";
    j["config"] = config_to_json(manifest.config);
    j["world_digest"] = to_hex(manifest.world_digest);
    j["checkpoint_path"] = manifest.checkpoint_path;
    j["log_path"] = manifest.log_path;
    j["tool_version"] = manifest.tool_version;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    return j;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ShapeError("cannot read file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw ShapeError("cannot read file '" + path + "'");
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
}

Json load_json_file(const std::string& path) {
    return Json::parse(read_text_file(path));
}

void save_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

SurrogateWorld load_world(const std::string& path) {
    return world_from_json(load_json_file(path));
}

Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_json(load_json_file(path));
}

StyleCode load_code(const std::string& path, const StyleLayout& layout) {
    return code_from_json(load_json_file(path), layout);
}

}  // namespace maskmix
