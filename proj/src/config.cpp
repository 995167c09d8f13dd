#include "tna/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tna {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        long r = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': invalid integer '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': invalid number '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config field '" + key + "': invalid boolean '" + v + "'");
}

} // namespace

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    ConfigMap map;
    std::string line, section;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        if (!section.empty() && section != "run") key = section + "." + key;
        map[key] = value;
    }
    return map;
}

void apply_override(ConfigMap& map, const std::string& kv) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must be key=value, got '" + kv + "'");
    map[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
}

TrainConfig config_from_map(const ConfigMap& map) {
    TrainConfig cfg;
    for (const auto& [key, v] : map) {
        if (key == "dataset") cfg.dataset = v;
        else if (key == "arch") cfg.arch = v;
        else if (key == "timesteps") cfg.timesteps = static_cast<int>(to_long(key, v));
        else if (key == "epochs") cfg.epochs = static_cast<int>(to_long(key, v));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_long(key, v));
        else if (key == "lr") cfg.initial_lr = to_double(key, v);
        else if (key == "gamma") cfg.gamma = to_double(key, v);
        else if (key == "alpha_match") cfg.alpha_match = to_double(key, v);
        else if (key == "mode") cfg.mode = parse_train_mode(v);
        else if (key == "n_networks") cfg.n_networks = static_cast<int>(to_long(key, v));
        else if (key == "match_target") cfg.match_target = parse_match_target(v);
        else if (key == "dropout") cfg.dropout = to_double(key, v);
        else if (key == "lif_alpha") cfg.lif.alpha = to_double(key, v);
        else if (key == "lif_theta") cfg.lif.theta = to_double(key, v);
        else if (key == "surrogate_width") cfg.lif.surrogate_width = to_double(key, v);
        else if (key == "seed_base") cfg.seed_base = static_cast<std::uint64_t>(to_long(key, v));
        else if (key == "seed_twin") cfg.seed_twin = static_cast<std::uint64_t>(to_long(key, v));
        else if (key == "seed_data") cfg.seed_data = static_cast<std::uint64_t>(to_long(key, v));
        else if (key == "out_dir") cfg.out_dir = v;
        else if (key == "data_root") cfg.data_root = v;
        else if (key == "teacher_checkpoint") cfg.teacher_checkpoint = v;
        else if (key == "augment") cfg.augment = to_bool(key, v);
        else if (key == "val_fraction") cfg.val_fraction = to_double(key, v);
        else if (key == "limit_train") cfg.limit_train = to_long(key, v);
        else if (key == "limit_test") cfg.limit_test = to_long(key, v);
        else if (key == "record_walltime") cfg.record_walltime = to_bool(key, v);
        else if (key == "synth_train") cfg.synth_train = static_cast<int>(to_long(key, v));
        else if (key == "synth_test") cfg.synth_test = static_cast<int>(to_long(key, v));
        else if (key == "ternary.enabled") cfg.ternary.enabled = to_bool(key, v);
        else if (key == "ternary.delta") cfg.ternary.policy.delta = to_double(key, v);
        else if (key == "ternary.start_epoch")
            cfg.ternary.policy.start_epoch = static_cast<int>(to_long(key, v));
        else if (key == "ternary.mode") cfg.ternary.policy.mode = parse_quant_mode(v);
        else
            throw ConfigError("unknown config field '" + key + "'");
    }
    if (cfg.data_root.empty()) {
        const char* env = std::getenv("DATA_ROOT");
        if (env) cfg.data_root = env;
    }
    cfg.validate();
    return cfg;
}

void TrainConfig::validate() const {
    if (timesteps < 1) throw ConfigError("config field 'timesteps': must be >= 1");
    if (epochs < 1) throw ConfigError("config field 'epochs': must be >= 1");
    if (batch_size < 1) throw ConfigError("config field 'batch_size': must be >= 1");
    if (initial_lr <= 0) throw ConfigError("config field 'lr': must be > 0");
    if (gamma <= 0) throw ConfigError("config field 'gamma': must be > 0");
    if (dropout < 0 || dropout >= 1)
        throw ConfigError("config field 'dropout': must be in [0,1)");
    if (val_fraction < 0 || val_fraction >= 1)
        throw ConfigError("config field 'val_fraction': must be in [0,1)");
    lif.validate();
    TnaLossConfig lc{alpha_match, mode, n_networks, match_target};
    lc.validate();
    if ((mode == TrainMode::Kd || mode == TrainMode::KdCe) && n_networks != 1)
        throw ConfigError("kd modes train a single student network");
    if (ternary.enabled) ternary.policy.validate();
}

std::string snapshot_string(const TrainConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "arch = " << cfg.arch << "\n";
    os << "alpha_match = " << cfg.alpha_match << "\n";
    os << "augment = " << (cfg.augment ? "true" : "false") << "\n";
    os << "batch_size = " << cfg.batch_size << "\n";
    os << "data_root = " << cfg.data_root << "\n";
    os << "dataset = " << cfg.dataset << "\n";
    os << "dropout = " << cfg.dropout << "\n";
    os << "epochs = " << cfg.epochs << "\n";
    os << "gamma = " << cfg.gamma << "\n";
    os << "lif_alpha = " << cfg.lif.alpha << "\n";
    os << "lif_theta = " << cfg.lif.theta << "\n";
    os << "limit_test = " << cfg.limit_test << "\n";
    os << "limit_train = " << cfg.limit_train << "\n";
    os << "lr = " << cfg.initial_lr << "\n";
    os << "match_target = "
       << (cfg.match_target == MatchTarget::PerTimestepSum ? "per_timestep_sum"
                                                           : "summed_logits")
       << "\n";
    const char* mode = cfg.mode == TrainMode::Baseline ? "baseline"
                       : cfg.mode == TrainMode::Tna    ? "tna"
                       : cfg.mode == TrainMode::Kd     ? "kd"
                                                       : "kd_ce";
    os << "mode = " << mode << "\n";
    os << "n_networks = " << cfg.n_networks << "\n";
    os << "record_walltime = " << (cfg.record_walltime ? "true" : "false") << "\n";
    os << "seed_base = " << cfg.seed_base << "\n";
    os << "seed_data = " << cfg.seed_data << "\n";
    os << "seed_twin = " << cfg.seed_twin << "\n";
    os << "surrogate_width = " << cfg.lif.surrogate_width << "\n";
    os << "synth_test = " << cfg.synth_test << "\n";
    os << "synth_train = " << cfg.synth_train << "\n";
    os << "teacher_checkpoint = " << cfg.teacher_checkpoint << "\n";
    os << "timesteps = " << cfg.timesteps << "\n";
    os << "val_fraction = " << cfg.val_fraction << "\n";
    os << "ternary.enabled = " << (cfg.ternary.enabled ? "true" : "false") << "\n";
    os << "ternary.delta = " << cfg.ternary.policy.delta << "\n";
    os << "ternary.start_epoch = " << cfg.ternary.policy.start_epoch << "\n";
    os << "ternary.mode = "
       << (cfg.ternary.policy.mode == QuantMode::Ternary ? "ternary"
                                                         : "binary_sign")
       << "\n";
    return os.str();
}

} // namespace tna
