#include "hfl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hfl/digest.hpp"

namespace hfl {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        out += "\n  - ";
        out += s;
    }
    return out;
}

std::string trim(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> items)
    : std::runtime_error("invalid configuration:" + join(items)), items_(std::move(items)) {}

ConfigMap ConfigMap::from_text(const std::string& text) {
    ConfigMap m;
    std::vector<std::string> errs;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errs.push_back("line " + std::to_string(lineno) + ": unterminated section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errs.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) {
            errs.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        m.kv_[section.empty() ? key : section + "." + key] = val;
    }
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return m;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path});
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

const std::string* ConfigMap::find(const std::string& key) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
}

std::vector<std::string> ConfigMap::keys() const {
    std::vector<std::string> out;
    out.reserve(kv_.size());
    for (const auto& [k, v] : kv_) out.push_back(k);
    return out;
}

namespace {

// Typed reads that collect problems instead of throwing one at a time.
class Reader {
public:
    Reader(const ConfigMap& map, std::vector<std::string>& errs) : map_(map), errs_(errs) {}

    std::string str(const std::string& key, const std::string& def) {
        used_.insert(key);
        const auto* v = map_.find(key);
        return v ? *v : def;
    }

    bool present(const std::string& key) {
        used_.insert(key);
        return map_.find(key) != nullptr;
    }

    double num(const std::string& key, double def) {
        used_.insert(key);
        const auto* v = map_.find(key);
        if (!v) return def;
        try {
            std::size_t pos = 0;
            const double d = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return d;
        } catch (const std::exception&) {
            errs_.push_back(key + ": not a number: '" + *v + "'");
            return def;
        }
    }

    int integer(const std::string& key, int def) {
        const double d = num(key, def);
        const int i = static_cast<int>(d);
        if (static_cast<double>(i) != d) {
            errs_.push_back(key + ": not an integer");
            return def;
        }
        return i;
    }

    bool boolean(const std::string& key, bool def) {
        used_.insert(key);
        const auto* v = map_.find(key);
        if (!v) return def;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        errs_.push_back(key + ": not a boolean: '" + *v + "'");
        return def;
    }

    std::vector<double> num_list(const std::string& key) {
        used_.insert(key);
        std::vector<double> out;
        const auto* v = map_.find(key);
        if (!v || trim(*v).empty()) return out;
        for (const auto& tok : split(*v, ',')) {
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                errs_.push_back(key + ": not a number: '" + tok + "'");
            }
        }
        return out;
    }

    std::vector<std::uint64_t> u64_list(const std::string& key,
                                        std::vector<std::uint64_t> def) {
        used_.insert(key);
        const auto* v = map_.find(key);
        if (!v || trim(*v).empty()) return def;
        std::vector<std::uint64_t> out;
        for (const auto& tok : split(*v, ',')) {
            try {
                out.push_back(std::stoull(tok));
            } catch (const std::exception&) {
                errs_.push_back(key + ": not an unsigned integer: '" + tok + "'");
            }
        }
        return out;
    }

    void check_unknown(const ConfigMap& map) {
        for (const auto& k : map.keys())
            if (used_.find(k) == used_.end()) errs_.push_back("unknown key: " + k);
    }

private:
    const ConfigMap& map_;
    std::vector<std::string>& errs_;
    std::set<std::string> used_;
};

// "1x5,5x5,25x5": cluster-count x cluster-size per layer, top down.
std::vector<std::vector<int>> parse_layers(const std::string& text,
                                           std::vector<std::string>& errs) {
    std::vector<std::vector<int>> layers;
    for (const auto& tok : split(text, ',')) {
        const auto x = tok.find('x');
        if (x == std::string::npos) {
            errs.push_back("hierarchy.layers: expected <count>x<size>, got '" + tok + "'");
            continue;
        }
        try {
            const int count = std::stoi(tok.substr(0, x));
            const int size = std::stoi(tok.substr(x + 1));
            if (count < 1 || size < 1) {
                errs.push_back("hierarchy.layers: counts and sizes must be positive in '" + tok +
                               "'");
                continue;
            }
            layers.push_back(HierarchySpec::uniform_layer(count, size));
        } catch (const std::exception&) {
            errs.push_back("hierarchy.layers: bad token '" + tok + "'");
        }
    }
    return layers;
}

std::vector<AttachPoint> parse_attach(const std::string& text, std::vector<std::string>& errs) {
    std::vector<AttachPoint> out;
    if (trim(text).empty()) return out;
    for (const auto& tok : split(text, ',')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) {
            errs.push_back("hierarchy.attach: expected <layer>:<parent_index>, got '" + tok + "'");
            continue;
        }
        try {
            out.push_back({std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))});
        } catch (const std::exception&) {
            errs.push_back("hierarchy.attach: bad token '" + tok + "'");
        }
    }
    return out;
}

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    const ConfigMap map = ConfigMap::from_text(text);
    std::vector<std::string> errs;
    Reader r(map, errs);
    ExperimentConfig c;

    // hierarchy
    const std::string layers_text = r.str("hierarchy.layers", "");
    if (layers_text.empty()) {
        errs.push_back("hierarchy.layers: required");
    } else {
        c.hierarchy.layers = parse_layers(layers_text, errs);
        if (!c.hierarchy.layers.empty() && c.hierarchy.layers.front().size() != 1)
            errs.push_back("hierarchy.layers: the top layer must hold exactly one cluster");
    }
    c.hierarchy.attach = parse_attach(r.str("hierarchy.attach", ""), errs);
    const std::string mode = r.str("hierarchy.mode", "lut");
    if (mode == "lut") {
        c.cluster_mode = ClusterMode::Lut;
    } else if (mode == "eut") {
        c.cluster_mode = ClusterMode::Eut;
    } else if (mode == "bernoulli") {
        c.lut_probability = r.num("hierarchy.lut_probability", 0.5);
        if (!(c.lut_probability >= 0.0) || c.lut_probability > 1.0)
            errs.push_back("hierarchy.lut_probability: outside [0,1]");
    } else {
        errs.push_back("hierarchy.mode: expected lut, eut, or bernoulli, got '" + mode + "'");
    }
    if (mode != "bernoulli" && r.present("hierarchy.lut_probability"))
        errs.push_back("hierarchy.lut_probability: only meaningful with mode = bernoulli");

    // topology
    c.topo_seed = static_cast<std::uint64_t>(r.num("topology.seed", 99));
    c.comm_range_m = r.num("topology.comm_range_m", 250.0);
    c.disc_radius_m = r.num("topology.disc_radius_m", 500.0);
    c.edge_weight = r.num("topology.edge_weight", 0.0);
    if (!(c.comm_range_m > 0.0)) errs.push_back("topology.comm_range_m: must be positive");
    if (!(c.disc_radius_m > 0.0)) errs.push_back("topology.disc_radius_m: must be positive");
    if (c.edge_weight < 0.0) errs.push_back("topology.edge_weight: must be nonnegative");

    // dataset
    const std::string dkind = r.str("dataset.kind", "blobs");
    if (dkind == "blobs") {
        c.data_kind = DataKind::Blobs;
    } else if (dkind == "mnist") {
        c.data_kind = DataKind::Mnist;
    } else {
        errs.push_back("dataset.kind: expected blobs or mnist, got '" + dkind + "'");
    }
    c.mnist_dir = r.str("dataset.mnist_dir", "");
    if (c.data_kind == DataKind::Mnist && c.mnist_dir.empty())
        errs.push_back("dataset.mnist_dir: required for mnist");
    c.samples_per_leaf = r.integer("dataset.samples_per_leaf", 480);
    if (c.samples_per_leaf < 1) errs.push_back("dataset.samples_per_leaf: must be positive");
    const std::string scheme = r.str("dataset.scheme", "iid");
    if (scheme == "iid") {
        c.partition.scheme = Scheme::Iid;
    } else if (scheme == "non_iid") {
        c.partition.scheme = Scheme::NonIid;
    } else {
        errs.push_back("dataset.scheme: expected iid or non_iid, got '" + scheme + "'");
    }
    c.partition.labels_per_node = r.integer("dataset.labels_per_node", 1);
    if (c.partition.labels_per_node < 1)
        errs.push_back("dataset.labels_per_node: must be positive");
    c.data_seed = static_cast<std::uint64_t>(r.num("dataset.seed", 7));
    c.features = r.integer("dataset.features", 20);
    c.classes = r.integer("dataset.classes", 5);
    c.spread = r.num("dataset.spread", 0.5);
    c.center_scale = r.num("dataset.center_scale", 2.0);
    if (c.data_kind == DataKind::Blobs) {
        if (c.features < 1) errs.push_back("dataset.features: must be positive");
        if (c.classes < 2) errs.push_back("dataset.classes: need at least two classes");
        if (!(c.spread > 0.0)) errs.push_back("dataset.spread: must be positive");
        if (!(c.center_scale > 0.0)) errs.push_back("dataset.center_scale: must be positive");
    }

    // loss
    const std::string lkind = r.str("loss.kind", "svm");
    if (lkind == "svm") {
        c.loss.kind = LossSpec::Kind::SvmL2;
    } else if (lkind == "mlp") {
        c.loss.kind = LossSpec::Kind::Mlp;
    } else {
        errs.push_back("loss.kind: expected svm or mlp, got '" + lkind + "'");
    }
    c.loss.mu = r.num("loss.mu", 0.1);
    c.loss.eta = r.num("loss.eta", 10.0);
    c.loss.hidden = r.integer("loss.hidden", 32);
    c.loss.reg = r.num("loss.reg", 0.1);
    if (!(c.loss.mu > 0.0)) errs.push_back("loss.mu: must be positive");
    if (!(c.loss.eta >= c.loss.mu)) errs.push_back("loss.eta: must be at least loss.mu");
    if (c.loss.kind == LossSpec::Kind::Mlp && c.loss.hidden < 1)
        errs.push_back("loss.hidden: must be positive");
    if (c.loss.reg < 0.0) errs.push_back("loss.reg: must be nonnegative");

    // policy
    const std::string pkind = r.str("policy.kind", "fixed");
    c.policy.fixed_theta = r.integer("policy.theta", 0);
    c.policy.sigma = r.num_list("policy.sigma");
    c.epsilon = r.num("policy.epsilon", 0.0);
    c.kappa = r.integer("policy.kappa", 0);
    c.policy.delta = r.num("policy.delta", 0.0);
    c.policy.omega = r.num("policy.omega", 2.0);
    c.policy.chi = r.num("policy.chi", 1.0);
    c.policy.psi = r.num("policy.psi", 0.0);
    c.policy.theta_cap = r.integer("policy.theta_cap", 500);
    const int depth = static_cast<int>(c.hierarchy.layers.size());
    if (pkind == "fixed") {
        c.policy.kind = PolicyConfig::Kind::Fixed;
        if (!r.present("policy.theta"))
            errs.push_back("policy.theta: required for the fixed policy");
        if (c.policy.fixed_theta < 0) errs.push_back("policy.theta: must be nonnegative");
    } else if (pkind == "gap_target") {
        c.policy.kind = PolicyConfig::Kind::GapTarget;
        if (c.policy.sigma.empty()) {
            c.derive_sigma = true;
            if (!(c.epsilon > 0.0))
                errs.push_back("policy.epsilon: required (positive) to derive sigma");
            if (c.kappa < 1) errs.push_back("policy.kappa: required (>= 1) to derive sigma");
        } else {
            if (depth > 0 && static_cast<int>(c.policy.sigma.size()) != depth)
                errs.push_back("policy.sigma: need one value per layer (" +
                               std::to_string(depth) + ")");
            for (double s : c.policy.sigma)
                if (!(s > 0.0)) {
                    errs.push_back("policy.sigma: entries must be positive");
                    break;
                }
        }
    } else if (pkind == "linear_rate") {
        c.policy.kind = PolicyConfig::Kind::LinearRate;
        if (c.policy.delta == 0.0) {
            c.derive_delta = true;
            if (!(c.epsilon > 0.0))
                errs.push_back("policy.epsilon: required (positive) to derive delta");
            if (c.kappa < 1) errs.push_back("policy.kappa: required (>= 1) to derive delta");
        } else if (!(c.policy.delta > 0.0) ||
                   c.policy.delta > c.loss.mu / c.loss.eta) {
            errs.push_back("policy.delta: outside (0, mu/eta]");
        }
        if (!(c.policy.omega > 1.0)) errs.push_back("policy.omega: must exceed 1");
    } else if (pkind == "error_budget") {
        c.policy.kind = PolicyConfig::Kind::ErrorBudget;
        if (!(c.policy.psi > 0.0)) errs.push_back("policy.psi: must be positive");
    } else {
        errs.push_back(
            "policy.kind: expected fixed, gap_target, linear_rate, or error_budget, got '" +
            pkind + "'");
    }
    if (!(c.policy.chi >= 1.0)) errs.push_back("policy.chi: must be at least 1");
    if (c.policy.theta_cap < 1) errs.push_back("policy.theta_cap: must be positive");

    // run
    c.rounds = r.integer("run.rounds", 30);
    if (c.rounds < 0) errs.push_back("run.rounds: must be nonnegative");
    c.seeds = r.u64_list("run.seeds", {1});
    if (c.seeds.empty()) errs.push_back("run.seeds: need at least one seed");
    const std::string variant = r.str("run.variant", "param_share");
    if (variant == "param_share") {
        c.variant = ShareVariant::ParamShare;
    } else if (variant == "grad_share") {
        c.variant = ShareVariant::GradShare;
    } else {
        errs.push_back("run.variant: expected param_share or grad_share, got '" + variant + "'");
    }
    c.alpha = r.num("run.alpha", 0.0);
    c.lambda_step = r.num("run.lambda_step", 0.0);
    if (c.variant == ShareVariant::GradShare) {
        if (!(c.loss.mu > 0.0) || !(c.alpha > 1.0 / c.loss.mu))
            errs.push_back("run.alpha: gradient relaying needs alpha > 1/mu");
        if (!(c.lambda_step > 1.0))
            errs.push_back("run.lambda_step: gradient relaying needs lambda_step > 1");
    }
    c.sampling_fraction = r.num("run.sampling_fraction", 1.0);
    if (!(c.sampling_fraction > 0.0) || c.sampling_fraction > 1.0)
        errs.push_back("run.sampling_fraction: outside (0,1]");
    c.track_accuracy = r.boolean("run.track_accuracy", true);
    c.emit_bound = r.boolean("run.bound", false);
    c.oracle_budget_factor = r.integer("run.oracle_budget_factor", 10);
    if (c.oracle_budget_factor < 1) errs.push_back("run.oracle_budget_factor: must be positive");

    // energy
    c.energy.p_d2d_dbm = r.num("energy.p_d2d_dbm", 10.0);
    c.energy.p_uplink_dbm = r.num("energy.p_uplink_dbm", 24.0);
    c.energy.rate_bps = r.num("energy.rate_bps", 1e6);
    c.energy.bits_per_param = r.integer("energy.bits_per_param", 32);
    c.energy.duplex_factor = r.num("energy.duplex_factor", 2.0);
    c.energy.delay_s = r.num("energy.delay_s", 0.25);
    if (!(c.energy.rate_bps > 0.0)) errs.push_back("energy.rate_bps: must be positive");
    if (c.energy.bits_per_param < 1) errs.push_back("energy.bits_per_param: must be positive");
    if (!(c.energy.duplex_factor > 0.0)) errs.push_back("energy.duplex_factor: must be positive");

    r.check_unknown(map);
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path});
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

std::string ExperimentConfig::effective() const {
    std::string out;
    out += "[hierarchy]\n";
    out += "layers = ";
    for (std::size_t j = 0; j < hierarchy.layers.size(); ++j) {
        if (j) out += ",";
        out += std::to_string(hierarchy.layers[j].size()) + "x" +
               std::to_string(hierarchy.layers[j].empty() ? 0 : hierarchy.layers[j].front());
    }
    out += "\n";
    out += "attach = ";
    for (std::size_t i = 0; i < hierarchy.attach.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(hierarchy.attach[i].layer) + ":" +
               std::to_string(hierarchy.attach[i].parent_index);
    }
    out += "\n";
    out += std::string("mode = ") +
           (lut_probability >= 0.0 ? "bernoulli"
            : cluster_mode == ClusterMode::Lut ? "lut"
                                               : "eut") +
           "\n";
    if (lut_probability >= 0.0) out += "lut_probability = " + fmt_num(lut_probability) + "\n";
    out += "\n[topology]\n";
    out += "seed = " + std::to_string(topo_seed) + "\n";
    out += "comm_range_m = " + fmt_num(comm_range_m) + "\n";
    out += "disc_radius_m = " + fmt_num(disc_radius_m) + "\n";
    out += "edge_weight = " + fmt_num(edge_weight) + "\n";
    out += "\n[dataset]\n";
    out += std::string("kind = ") + (data_kind == DataKind::Blobs ? "blobs" : "mnist") + "\n";
    if (!mnist_dir.empty()) out += "mnist_dir = " + mnist_dir + "\n";
    out += "samples_per_leaf = " + std::to_string(samples_per_leaf) + "\n";
    out += std::string("scheme = ") +
           (partition.scheme == Scheme::Iid ? "iid" : "non_iid") + "\n";
    out += "labels_per_node = " + std::to_string(partition.labels_per_node) + "\n";
    out += "seed = " + std::to_string(data_seed) + "\n";
    if (data_kind == DataKind::Blobs) {
        out += "features = " + std::to_string(features) + "\n";
        out += "classes = " + std::to_string(classes) + "\n";
        out += "spread = " + fmt_num(spread) + "\n";
        out += "center_scale = " + fmt_num(center_scale) + "\n";
    }
    out += "\n[loss]\n";
    out += std::string("kind = ") + (loss.kind == LossSpec::Kind::SvmL2 ? "svm" : "mlp") + "\n";
    out += "mu = " + fmt_num(loss.mu) + "\n";
    out += "eta = " + fmt_num(loss.eta) + "\n";
    if (loss.kind == LossSpec::Kind::Mlp) {
        out += "hidden = " + std::to_string(loss.hidden) + "\n";
        out += "reg = " + fmt_num(loss.reg) + "\n";
    }
    out += "\n[policy]\n";
    switch (policy.kind) {
        case PolicyConfig::Kind::Fixed:
            out += "kind = fixed\n";
            out += "theta = " + std::to_string(policy.fixed_theta) + "\n";
            break;
        case PolicyConfig::Kind::GapTarget:
            out += "kind = gap_target\n";
            if (derive_sigma) {
                out += "epsilon = " + fmt_num(epsilon) + "\n";
                out += "kappa = " + std::to_string(kappa) + "\n";
            } else {
                out += "sigma = ";
                for (std::size_t i = 0; i < policy.sigma.size(); ++i) {
                    if (i) out += ",";
                    out += fmt_num(policy.sigma[i]);
                }
                out += "\n";
            }
            break;
        case PolicyConfig::Kind::LinearRate:
            out += "kind = linear_rate\n";
            if (derive_delta) {
                out += "epsilon = " + fmt_num(epsilon) + "\n";
                out += "kappa = " + std::to_string(kappa) + "\n";
            } else {
                out += "delta = " + fmt_num(policy.delta) + "\n";
            }
            out += "omega = " + fmt_num(policy.omega) + "\n";
            break;
        case PolicyConfig::Kind::ErrorBudget:
            out += "kind = error_budget\n";
            out += "psi = " + fmt_num(policy.psi) + "\n";
            break;
    }
    out += "chi = " + fmt_num(policy.chi) + "\n";
    out += "theta_cap = " + std::to_string(policy.theta_cap) + "\n";
    out += "\n[run]\n";
    out += "rounds = " + std::to_string(rounds) + "\n";
    out += "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(seeds[i]);
    }
    out += "\n";
    out += std::string("variant = ") +
           (variant == ShareVariant::ParamShare ? "param_share" : "grad_share") + "\n";
    if (variant == ShareVariant::GradShare) {
        out += "alpha = " + fmt_num(alpha) + "\n";
        out += "lambda_step = " + fmt_num(lambda_step) + "\n";
    }
    out += "sampling_fraction = " + fmt_num(sampling_fraction) + "\n";
    out += std::string("track_accuracy = ") + (track_accuracy ? "true" : "false") + "\n";
    out += std::string("bound = ") + (emit_bound ? "true" : "false") + "\n";
    out += "oracle_budget_factor = " + std::to_string(oracle_budget_factor) + "\n";
    out += "\n[energy]\n";
    out += "p_d2d_dbm = " + fmt_num(energy.p_d2d_dbm) + "\n";
    out += "p_uplink_dbm = " + fmt_num(energy.p_uplink_dbm) + "\n";
    out += "rate_bps = " + fmt_num(energy.rate_bps) + "\n";
    out += "bits_per_param = " + std::to_string(energy.bits_per_param) + "\n";
    out += "duplex_factor = " + fmt_num(energy.duplex_factor) + "\n";
    out += "delay_s = " + fmt_num(energy.delay_s) + "\n";
    return out;
}

std::uint64_t ExperimentConfig::digest() const { return fnv1a(effective()); }

}  // namespace hfl
