#include "actmon/config.hpp"

#include <sstream>

#include "actmon/errors.hpp"
#include "actmon/textio.hpp"

namespace actmon {

std::vector<KvSection> parse_kv_sections(const std::string& text) {
    std::vector<KvSection> sections;
    sections.push_back({});  // top-level
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = trim(t.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw InvalidConfig("line " + std::to_string(line_no) + ": unterminated section");
            const auto fields = split_fields(t.substr(1, t.size() - 2));
            if (fields.empty() || fields.size() > 2) {
                throw InvalidConfig("line " + std::to_string(line_no) + ": bad section header");
            }
            KvSection s;
            s.name = std::string(fields[0]);
            if (fields.size() == 2) s.arg = std::string(fields[1]);
            sections.push_back(std::move(s));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidConfig("line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(t.substr(0, eq));
        const auto value = trim(t.substr(eq + 1));
        if (key.empty()) throw InvalidConfig("line " + std::to_string(line_no) + ": empty key");
        sections.back().entries.emplace_back(std::string(key), std::string(value));
    }
    return sections;
}

namespace {

std::size_t to_size(const std::string& v, std::string_view what) {
    const auto n = parse_int(v, what);
    if (n < 0) throw InvalidConfig(std::string(what) + " must be nonnegative");
    return static_cast<std::size_t>(n);
}

std::size_t to_depth(const std::string& v, std::string_view what) {
    if (v == "none") return kUnboundedDepth;
    return to_size(v, what);
}

std::size_t to_max_features(const std::string& v, std::string_view what) {
    if (v == "auto") return kAutoMaxFeatures;
    return to_size(v, what);
}

bool to_bool(const std::string& v, std::string_view what) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidConfig(std::string(what) + " must be true/false");
}

}  // namespace

PipelineConfig PipelineConfig::from_text(const std::string& text) {
    PipelineConfig cfg;
    const auto sections = parse_kv_sections(text);
    for (const auto& section : sections) {
        if (!section.name.empty()) {
            throw InvalidConfig("pipeline config does not use sections: [" + section.name + "]");
        }
        for (const auto& [key, value] : section.entries) {
            if (key == "window") cfg.window = to_size(value, key);
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
            else if (key == "min_run") cfg.min_run = to_size(value, key);
            else if (key == "mi_mode") {
                if (value == "instances") cfg.mi_mode = MiMode::per_instance;
                else if (value == "types") cfg.mi_mode = MiMode::per_type;
                else throw InvalidConfig("mi_mode must be instances or types");
            } else if (key == "activity_trees") cfg.activity_rf.n_trees = to_size(value, key);
            else if (key == "activity_max_depth") cfg.activity_rf.max_depth = to_depth(value, key);
            else if (key == "activity_min_samples_split") {
                cfg.activity_rf.min_samples_split = to_size(value, key);
            } else if (key == "activity_max_features") {
                cfg.activity_rf.max_features = to_max_features(value, key);
            } else if (key == "anomaly_trees") cfg.anomaly_rf.n_trees = to_size(value, key);
            else if (key == "anomaly_max_depth") cfg.anomaly_rf.max_depth = to_depth(value, key);
            else if (key == "anomaly_min_samples_split") {
                cfg.anomaly_rf.min_samples_split = to_size(value, key);
            } else if (key == "anomaly_max_features") {
                cfg.anomaly_rf.max_features = to_max_features(value, key);
            } else if (key == "z_threshold") {
                cfg.z_threshold = parse_double(value, key);
                if (cfg.z_threshold <= 0.0) throw InvalidConfig("z_threshold must be positive");
            } else if (key == "rules_path") cfg.rules_path = value;
            else if (key == "lstm_hidden") cfg.lstm.hidden = to_size(value, key);
            else if (key == "lstm_epochs") cfg.lstm.epochs = to_size(value, key);
            else if (key == "lstm_lr") cfg.lstm.learning_rate = parse_double(value, key);
            else if (key == "lookback") cfg.lstm.lookback = to_size(value, key);
            else if (key == "horizon") cfg.lstm.horizon = to_size(value, key);
            else if (key == "split_ratio") cfg.split_ratio = parse_double(value, key);
            else if (key == "stratified") cfg.stratified = to_bool(value, key);
            else if (key == "chronological") cfg.chronological = to_bool(value, key);
            else throw InvalidConfig("unknown config key: " + key);
        }
    }
    if (cfg.window < 2) throw InvalidConfig("window must be >= 2");
    if (cfg.split_ratio <= 0.0 || cfg.split_ratio >= 1.0) {
        throw InvalidConfig("split_ratio must lie in (0, 1)");
    }
    cfg.activity_rf.seed = cfg.seed;
    cfg.anomaly_rf.seed = cfg.seed + 1;
    cfg.lstm.seed = cfg.seed + 2;
    cfg.lstm.train_ratio = cfg.split_ratio;
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw InvalidConfig(e.what());
    }
    return from_text(text);
}

std::string PipelineConfig::to_text() const {
    std::ostringstream os;
    os << "window = " << window << '\n';
    os << "seed = " << seed << '\n';
    os << "min_run = " << min_run << '\n';
    os << "mi_mode = " << (mi_mode == MiMode::per_instance ? "instances" : "types") << '\n';
    const auto forest = [&](const char* prefix, const ForestConfig& rf) {
        os << prefix << "_trees = " << rf.n_trees << '\n';
        os << prefix << "_max_depth = ";
        if (rf.max_depth == kUnboundedDepth) os << "none";
        else os << rf.max_depth;
        os << '\n';
        os << prefix << "_min_samples_split = " << rf.min_samples_split << '\n';
        os << prefix << "_max_features = ";
        if (rf.max_features == kAutoMaxFeatures) os << "auto";
        else os << rf.max_features;
        os << '\n';
    };
    forest("activity", activity_rf);
    forest("anomaly", anomaly_rf);
    os << "z_threshold = " << fmt_g17(z_threshold) << '\n';
    if (!rules_path.empty()) os << "rules_path = " << rules_path << '\n';
    os << "lstm_hidden = " << lstm.hidden << '\n';
    os << "lstm_epochs = " << lstm.epochs << '\n';
    os << "lstm_lr = " << fmt_g17(lstm.learning_rate) << '\n';
    os << "lookback = " << lstm.lookback << '\n';
    os << "horizon = " << lstm.horizon << '\n';
    os << "split_ratio = " << fmt_g17(split_ratio) << '\n';
    os << "stratified = " << (stratified ? "true" : "false") << '\n';
    os << "chronological = " << (chronological ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace actmon
