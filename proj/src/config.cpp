#include "imfas/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "imfas/errors.hpp"

namespace imfas {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class KvReader {
  public:
    explicit KvReader(const KeyValues& kv) : kv_(kv) {}

    long integer(const std::string& key, long fallback) {
        const auto it = lookup(key);
        if (it == kv_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw SpecError("config key '" + key + "' is not an integer: " + it->second);
        }
    }

    double real(const std::string& key, double fallback) {
        const auto it = lookup(key);
        if (it == kv_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw SpecError("config key '" + key + "' is not a number: " + it->second);
        }
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto it = lookup(key);
        return it == kv_.end() ? fallback : it->second;
    }

    void reject_unknown(const std::string& what) const {
        for (const auto& [key, value] : kv_) {
            if (!seen_.count(key)) {
                throw SpecError("unknown " + what + " config key: " + key);
            }
        }
    }

  private:
    KeyValues::const_iterator lookup(const std::string& key) {
        seen_.insert(key);
        return kv_.find(key);
    }

    const KeyValues& kv_;
    std::set<std::string> seen_;
};

}  // namespace

KeyValues parse_kv_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw SpecError("config line " + std::to_string(line_no) +
                            ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw SpecError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (!kv.emplace(key, value).second) {
            throw SpecError("duplicate config key: " + key);
        }
    }
    return kv;
}

KeyValues parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_kv_text(buffer.str());
}

SyntheticSpec synthetic_spec_from(const KeyValues& kv) {
    KvReader reader(kv);
    SyntheticSpec spec;
    spec.num_datasets = static_cast<int>(reader.integer("num_datasets", spec.num_datasets));
    spec.num_algorithms =
        static_cast<int>(reader.integer("num_algorithms", spec.num_algorithms));
    spec.num_fidelities =
        static_cast<int>(reader.integer("num_fidelities", spec.num_fidelities));
    spec.num_meta_features =
        static_cast<int>(reader.integer("num_meta_features", spec.num_meta_features));
    spec.latent_dim = static_cast<int>(reader.integer("latent_dim", spec.latent_dim));
    spec.noise_sd = reader.real("noise_sd", spec.noise_sd);
    spec.crossing_fraction = reader.real("crossing_fraction", spec.crossing_fraction);
    spec.seed = static_cast<std::uint64_t>(reader.integer("seed", 0));
    spec.rate_min = reader.real("rate_min", spec.rate_min);
    spec.rate_max = reader.real("rate_max", spec.rate_max);
    reader.reject_unknown("synthetic");
    spec.validate();
    return spec;
}

namespace {

TrainConfig train_config_from(KvReader& reader) {
    TrainConfig cfg;
    cfg.epochs = static_cast<int>(reader.integer("epochs", cfg.epochs));
    cfg.batch_size = static_cast<int>(reader.integer("batch_size", cfg.batch_size));
    cfg.learning_rate = reader.real("learning_rate", cfg.learning_rate);
    cfg.seed = static_cast<std::uint64_t>(reader.integer("seed", 0));
    cfg.softrank_epsilon = reader.real("softrank_epsilon", cfg.softrank_epsilon);
    cfg.adam.beta1 = reader.real("adam_beta1", cfg.adam.beta1);
    cfg.adam.beta2 = reader.real("adam_beta2", cfg.adam.beta2);
    cfg.adam.epsilon = reader.real("adam_epsilon", cfg.adam.epsilon);
    cfg.grad_clip_norm = reader.real("grad_clip_norm", cfg.grad_clip_norm);
    cfg.lstm_hidden = static_cast<int>(reader.integer("lstm_hidden", cfg.lstm_hidden));
    cfg.lstm_layers = static_cast<int>(reader.integer("lstm_layers", cfg.lstm_layers));
    const std::string encoder = reader.text("encoder_hidden", "");
    if (!encoder.empty()) {
        cfg.encoder_hidden.clear();
        std::stringstream ss(encoder);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                cfg.encoder_hidden.push_back(std::stoi(item));
            } catch (const std::exception&) {
                throw SpecError("config key 'encoder_hidden' must be a comma list of ints");
            }
        }
    } else {
        // Keep the encoder output glued to the LSTM width on override.
        if (cfg.lstm_hidden != 200) {
            cfg.encoder_hidden.back() = cfg.lstm_hidden;
        }
    }
    return cfg;
}

}  // namespace

TrainConfig train_config_from(const KeyValues& kv) {
    KvReader reader(kv);
    TrainConfig cfg = train_config_from(reader);
    reader.reject_unknown("train");
    return cfg;
}

ExperimentConfig experiment_config_from(const KeyValues& kv) {
    KvReader reader(kv);
    ExperimentConfig cfg;
    cfg.train = train_config_from(reader);
    cfg.test_fraction = reader.real("test_fraction", cfg.test_fraction);
    cfg.name = reader.text("name", cfg.name);
    reader.reject_unknown("experiment");
    return cfg;
}

std::string canonical_text(const KeyValues& kv) {
    std::ostringstream out;
    for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
    return out.str();
}

KeyValues to_key_values(const SyntheticSpec& spec) {
    KeyValues kv;
    kv["num_datasets"] = std::to_string(spec.num_datasets);
    kv["num_algorithms"] = std::to_string(spec.num_algorithms);
    kv["num_fidelities"] = std::to_string(spec.num_fidelities);
    kv["num_meta_features"] = std::to_string(spec.num_meta_features);
    kv["latent_dim"] = std::to_string(spec.latent_dim);
    kv["noise_sd"] = format_double(spec.noise_sd);
    kv["crossing_fraction"] = format_double(spec.crossing_fraction);
    kv["seed"] = std::to_string(spec.seed);
    kv["rate_min"] = format_double(spec.rate_min);
    kv["rate_max"] = format_double(spec.rate_max);
    return kv;
}

KeyValues to_key_values(const TrainConfig& cfg) {
    KeyValues kv;
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["batch_size"] = std::to_string(cfg.batch_size);
    kv["learning_rate"] = format_double(cfg.learning_rate);
    kv["seed"] = std::to_string(cfg.seed);
    kv["softrank_epsilon"] = format_double(cfg.softrank_epsilon);
    kv["adam_beta1"] = format_double(cfg.adam.beta1);
    kv["adam_beta2"] = format_double(cfg.adam.beta2);
    kv["adam_epsilon"] = format_double(cfg.adam.epsilon);
    kv["grad_clip_norm"] = format_double(cfg.grad_clip_norm);
    kv["lstm_hidden"] = std::to_string(cfg.lstm_hidden);
    kv["lstm_layers"] = std::to_string(cfg.lstm_layers);
    std::string encoder;
    for (std::size_t i = 0; i < cfg.encoder_hidden.size(); ++i) {
        if (i) encoder += ',';
        encoder += std::to_string(cfg.encoder_hidden[i]);
    }
    kv["encoder_hidden"] = encoder;
    return kv;
}

KeyValues to_key_values(const ExperimentConfig& cfg) {
    KeyValues kv = to_key_values(cfg.train);
    kv["test_fraction"] = format_double(cfg.test_fraction);
    kv["name"] = cfg.name;
    return kv;
}

}  // namespace imfas
