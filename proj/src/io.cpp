#include "switching/io.hpp"

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "switching/builtin.hpp"

namespace switching {

using nlohmann::json;

const char* const kVersion = "0.1.0";

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + path);
}

std::string hex_encode(const double* data, std::size_t count) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(count * 16);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
        for (int nibble = 15; nibble >= 0; --nibble)
            out.push_back(digits[(bits >> (4 * nibble)) & 0xF]);
    }
    return out;
}

VectorXd hex_decode(const std::string& hex) {
    if (hex.size() % 16 != 0) throw IoError("checkpoint: malformed parameter payload");
    VectorXd out(hex.size() / 16);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int c = 0; c < 16; ++c) {
            const char ch = hex[i * 16 + c];
            std::uint64_t v;
            if (ch >= '0' && ch <= '9')
                v = ch - '0';
            else if (ch >= 'a' && ch <= 'f')
                v = 10 + ch - 'a';
            else
                throw IoError("checkpoint: malformed parameter payload");
            bits = (bits << 4) | v;
        }
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace

void save_value_field(const ValueField& field, const std::string& stem,
                      std::uint64_t model_hash) {
    const SpaceTimeGrid& grid = field.grid();
    json header;
    header["format"] = "switching-value-field-v1";
    header["endianness"] = "little";
    header["layout"] = "[regime][time][node]";
    header["regimes"] = field.num_regimes();
    header["horizon"] = grid.horizon;
    header["time_steps"] = grid.time_steps;
    header["model_hash"] = hash_hex(model_hash);
    json axes = json::array();
    for (const auto& a : grid.axes)
        axes.push_back({{"lo", a[0]}, {"hi", a[a.size() - 1]}, {"nodes", a.size()}});
    header["axes"] = axes;
    header["data"] = stem.substr(stem.find_last_of('/') + 1) + ".bin";
    write_file(stem + ".json", header.dump(2) + "\n");

    std::string bytes;
    const std::size_t per_regime =
        std::size_t(grid.time_steps + 1) * grid.num_space_nodes() * sizeof(double);
    bytes.reserve(field.num_regimes() * per_regime);
    for (int i = 0; i < field.num_regimes(); ++i) {
        const MatrixXd& v = field.regime(i);
        // row-major (time outer) on disk
        for (int k = 0; k <= grid.time_steps; ++k)
            bytes.append(reinterpret_cast<const char*>(v.row(k).eval().data()),
                         grid.num_space_nodes() * sizeof(double));
    }
    write_file(stem + ".bin", bytes);
}

ValueField load_value_field(const std::string& stem, std::uint64_t* model_hash_out) {
    json header;
    try {
        header = json::parse(read_file(stem + ".json"));
    } catch (const json::exception& e) {
        throw IoError(std::string("value field header: ") + e.what());
    }
    if (header.value("format", "") != "switching-value-field-v1")
        throw IoError("value field header: unknown format");

    std::vector<std::pair<double, double>> box;
    std::vector<int> nodes;
    for (const auto& a : header.at("axes")) {
        box.push_back({a.at("lo").get<double>(), a.at("hi").get<double>()});
        nodes.push_back(a.at("nodes").get<int>());
    }
    SpaceTimeGrid grid = SpaceTimeGrid::uniform(header.at("horizon").get<double>(),
                                                header.at("time_steps").get<int>(), box, nodes);
    const int m = header.at("regimes").get<int>();
    ValueField field(grid, m);

    const std::string bytes = read_file(stem + ".bin");
    const std::size_t expected =
        std::size_t(m) * (grid.time_steps + 1) * grid.num_space_nodes() * sizeof(double);
    if (bytes.size() != expected) throw IoError("value field payload size mismatch");
    const double* p = reinterpret_cast<const double*>(bytes.data());
    for (int i = 0; i < m; ++i)
        for (int k = 0; k <= grid.time_steps; ++k)
            for (int n = 0; n < grid.num_space_nodes(); ++n) field.at(i, k, n) = *p++;

    if (model_hash_out) {
        const std::string hex = header.value("model_hash", "0");
        *model_hash_out = std::stoull(hex, nullptr, 16);
    }
    return field;
}

void write_iteration_report_csv(const IterationReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "iteration,gap,sup_change,max_violation,violation_count,seconds\n";
    out << std::setprecision(17);
    for (const auto& r : report.records)
        out << r.iteration << ',' << r.gap << ',' << r.sup_change << ',' << r.max_violation
            << ',' << r.violation_count << ',' << r.seconds << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "lambda,sup_distance\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.lambda << ',' << r.sup_distance << '\n';
}

void write_training_log_csv(const std::vector<TrainLogEntry>& log, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "episode,loss,param_norm,seconds\n" << std::setprecision(17);
    for (const auto& e : log)
        out << e.episode << ',' << e.loss << ',' << e.param_norm << ',' << e.seconds << '\n';
}

void write_value_slice_csv(const std::string& path, const std::vector<double>& coords,
                           const std::vector<std::vector<double>>& per_regime_values) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "x";
    for (std::size_t i = 0; i < per_regime_values.size(); ++i) out << ",v" << i;
    out << '\n' << std::setprecision(17);
    for (std::size_t r = 0; r < coords.size(); ++r) {
        out << coords[r];
        for (const auto& col : per_regime_values) out << ',' << col[r];
        out << '\n';
    }
}

void write_probability_slice_csv(const std::string& path, const std::vector<double>& coords,
                                 int num_regimes,
                                 const std::vector<std::vector<double>>& per_pair_probs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "x";
    for (int i = 0; i < num_regimes; ++i)
        for (int j = 0; j < num_regimes; ++j)
            if (i != j) out << ",p" << i << "_" << j;
    out << '\n' << std::setprecision(17);
    for (std::size_t r = 0; r < coords.size(); ++r) {
        out << coords[r];
        for (const auto& col : per_pair_probs) out << ',' << col[r];
        out << '\n';
    }
}

void write_paths_csv(const std::string& path, const std::vector<EpisodePath>& paths) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    const int n = paths.empty() ? 0 : static_cast<int>(paths.front().states.cols());
    out << "path,k,t";
    for (int d = 0; d < n; ++d) out << ",x" << d;
    out << ",regime,reward\n" << std::setprecision(17);
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& ep = paths[p];
        const int K = static_cast<int>(ep.rewards.size());
        for (int k = 0; k <= K; ++k) {
            out << p << ',' << k << ',' << ep.times[k];
            for (int d = 0; d < n; ++d) out << ',' << ep.states(k, d);
            out << ',' << ep.regimes[k] << ',' << (k < K ? ep.rewards[k] : 0.0) << '\n';
        }
    }
}

json architecture_json(const ValueApproximator& net) {
    const Architecture& arch = net.architecture();
    json acts = json::array();
    for (Activation a : arch.activations) acts.push_back(to_string(a));
    return json{{"input_dim", arch.input_dim},
                {"hidden", arch.hidden},
                {"activations", acts},
                {"output_dim", arch.output_dim},
                {"include_time", net.config().include_time},
                {"include_regime", net.config().include_regime},
                {"per_regime_heads", net.config().per_regime_heads},
                {"num_regimes", net.num_regimes()},
                {"state_dim", net.state_dim()},
                {"horizon", net.horizon()}};
}

void save_checkpoint(const std::string& path, const ValueApproximator& net,
                     const VectorXd& params, std::uint64_t model_hash,
                     const std::vector<std::uint64_t>& seeds) {
    net.net().check_params(params);
    json doc;
    doc["format"] = "switching-checkpoint-v1";
    doc["version"] = kVersion;
    doc["architecture"] = architecture_json(net);
    doc["model_hash"] = hash_hex(model_hash);
    doc["seeds"] = seeds;
    doc["params_hex"] = hex_encode(params.data(), params.size());
    doc["checksum"] =
        hash_hex(fnv1a64(doc["params_hex"].get<std::string>() + doc["architecture"].dump()));
    write_file(path, doc.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
    if (doc.value("format", "") != "switching-checkpoint-v1")
        throw IoError("checkpoint: unknown format");
    const std::string params_hex = doc.at("params_hex").get<std::string>();
    const std::string checksum =
        hash_hex(fnv1a64(params_hex + doc.at("architecture").dump()));
    if (checksum != doc.value("checksum", ""))
        throw IoError("checkpoint: checksum mismatch (file corrupted or tampered)");

    Checkpoint cp;
    cp.params = hex_decode(params_hex);
    cp.architecture = doc.at("architecture");
    cp.model_hash = std::stoull(doc.at("model_hash").get<std::string>(), nullptr, 16);
    cp.seeds = doc.value("seeds", std::vector<std::uint64_t>{});
    return cp;
}

VectorXd load_checkpoint_params(const std::string& path, const ValueApproximator& expected) {
    Checkpoint cp = load_checkpoint(path);
    const json want = architecture_json(expected);
    // seed lineage and horizon may differ across runs; the structural fields
    // must not
    for (const char* key : {"input_dim", "hidden", "activations", "output_dim",
                            "include_time", "include_regime", "per_regime_heads",
                            "num_regimes", "state_dim"}) {
        if (cp.architecture.value(key, json()) != want.value(key, json()))
            throw ValidationError(std::string("checkpoint: architecture mismatch on '") + key +
                                  "'");
    }
    if (cp.params.size() != expected.param_count())
        throw ValidationError("checkpoint: parameter count mismatch");
    return cp.params;
}

void write_manifest(const std::string& path, const json& config_snapshot, std::uint64_t seed,
                    std::uint64_t model_hash, const std::vector<std::string>& output_files) {
    json doc;
    doc["format"] = "switching-run-manifest-v1";
    doc["version"] = kVersion;
    doc["seed"] = seed;
    doc["model_hash"] = hash_hex(model_hash);
    doc["config"] = config_snapshot;
    json outputs = json::object();
    for (const auto& f : output_files) {
        const std::string name = f.substr(f.find_last_of('/') + 1);
        outputs[name] = hash_hex(file_hash(f));
    }
    doc["outputs"] = outputs;
    write_file(path, doc.dump(2) + "\n");
}

std::uint64_t file_hash(const std::string& path) {
    return fnv1a64(read_file(path));
}

}  // namespace switching
