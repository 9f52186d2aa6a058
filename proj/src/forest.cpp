#include "actmon/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "actmon/errors.hpp"
#include "actmon/textio.hpp"

namespace actmon {

std::uint64_t ClassDistribution::total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

std::vector<double> ClassDistribution::proportions() const {
    const auto t = total();
    std::vector<double> p(counts.size(), 0.0);
    if (t == 0) return p;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        p[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
    }
    return p;
}

namespace {

double gini_from_counts(std::span<const std::uint64_t> counts, std::uint64_t total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (auto c : counts) {
        const auto p = static_cast<double>(c);
        sum_sq += p * p;
    }
    const auto t = static_cast<double>(total);
    return 1.0 - sum_sq / (t * t);
}

}  // namespace

double gini(const ClassDistribution& dist) {
    return gini_from_counts(dist.counts, dist.total());
}

Dataset make_dataset(FeatureSchema schema, const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& labels) {
    if (rows.size() != labels.size()) throw LengthMismatch("rows/labels size mismatch");
    Dataset data;
    data.schema = std::move(schema);
    data.classes = labels;
    std::sort(data.classes.begin(), data.classes.end());
    data.classes.erase(std::unique(data.classes.begin(), data.classes.end()), data.classes.end());

    data.x.reserve(rows.size() * data.schema.size());
    data.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != data.schema.size()) {
            throw SchemaMismatch("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                 " features, schema has " + std::to_string(data.schema.size()));
        }
        data.x.insert(data.x.end(), rows[i].begin(), rows[i].end());
        const auto it = std::lower_bound(data.classes.begin(), data.classes.end(), labels[i]);
        data.y.push_back(static_cast<std::size_t>(it - data.classes.begin()));
    }
    return data;
}

std::size_t TreeNode::majority_class() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] > counts[best]) best = k;  // tie keeps lowest index
    }
    return best;
}

namespace {

struct ValueLabel {
    double value;
    std::size_t label;
};

// Numeric sweep: sort by value, advance left-side class counts, test the
// midpoint before each new distinct value.
void scan_numeric(const Dataset& data, std::span<const std::size_t> rows, std::size_t feature,
                  std::span<const std::uint64_t> parent_counts, double parent_gini,
                  std::optional<SplitCandidate>& best, std::vector<ValueLabel>& scratch) {
    const std::size_t n = rows.size();
    const std::size_t k = parent_counts.size();
    scratch.clear();
    scratch.reserve(n);
    for (std::size_t r : rows) scratch.push_back({data.row(r)[feature], data.y[r]});
    std::sort(scratch.begin(), scratch.end(), [](const ValueLabel& a, const ValueLabel& b) {
        return a.value < b.value;
    });

    std::vector<std::uint64_t> left(k, 0);
    const auto nd = static_cast<double>(n);
    for (std::size_t i = 1; i < n; ++i) {
        left[scratch[i - 1].label] += 1;
        if (scratch[i].value == scratch[i - 1].value) continue;

        double left_sq = 0.0, right_sq = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const auto l = static_cast<double>(left[c]);
            const auto r = static_cast<double>(parent_counts[c] - left[c]);
            left_sq += l * l;
            right_sq += r * r;
        }
        const auto nl = static_cast<double>(i);
        const auto nr = nd - nl;
        const double weighted = (nl - left_sq / nl + nr - right_sq / nr) / nd;
        const double decrease = parent_gini - weighted;
        if (decrease <= 0.0) continue;
        if (!best || decrease > best->decrease) {
            const double threshold = scratch[i - 1].value + (scratch[i].value - scratch[i - 1].value) / 2.0;
            best = SplitCandidate{feature, false, threshold, decrease};
        }
    }
}

// One-vs-rest per observed category; categories tested in ascending code order.
void scan_categorical(const Dataset& data, std::span<const std::size_t> rows, std::size_t feature,
                      std::span<const std::uint64_t> parent_counts, double parent_gini,
                      std::optional<SplitCandidate>& best) {
    const std::size_t n = rows.size();
    const std::size_t k = parent_counts.size();
    std::map<double, std::vector<std::uint64_t>> per_category;
    for (std::size_t r : rows) {
        auto& counts = per_category[data.row(r)[feature]];
        if (counts.empty()) counts.assign(k, 0);
        counts[data.y[r]] += 1;
    }
    if (per_category.size() < 2) return;

    const auto nd = static_cast<double>(n);
    for (const auto& [category, left] : per_category) {
        double left_sq = 0.0, right_sq = 0.0;
        std::uint64_t nl_u = 0;
        for (std::size_t c = 0; c < k; ++c) {
            nl_u += left[c];
            const auto l = static_cast<double>(left[c]);
            const auto r = static_cast<double>(parent_counts[c] - left[c]);
            left_sq += l * l;
            right_sq += r * r;
        }
        const auto nl = static_cast<double>(nl_u);
        const auto nr = nd - nl;
        if (nl_u == 0 || nl_u == n) continue;
        const double weighted = (nl - left_sq / nl + nr - right_sq / nr) / nd;
        const double decrease = parent_gini - weighted;
        if (decrease <= 0.0) continue;
        if (!best || decrease > best->decrease) {
            best = SplitCandidate{feature, true, category, decrease};
        }
    }
}

std::vector<std::uint64_t> count_classes(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<std::uint64_t> counts(data.classes.size(), 0);
    for (std::size_t r : rows) counts[data.y[r]] += 1;
    return counts;
}

std::unique_ptr<TreeNode> build_node(const Dataset& data, std::vector<std::size_t>& rows,
                                     const ForestConfig& config, std::size_t depth, Rng& rng,
                                     std::size_t max_features) {
    auto node = std::make_unique<TreeNode>();
    node->counts = count_classes(data, rows);

    const std::uint64_t total = rows.size();
    const bool pure = std::count_if(node->counts.begin(), node->counts.end(),
                                    [](std::uint64_t c) { return c > 0; }) <= 1;
    if (pure || depth >= config.max_depth || total < config.min_samples_split) return node;

    auto candidates = rng.sample_without_replacement(data.d(), max_features);
    std::sort(candidates.begin(), candidates.end());
    const auto split = best_split(data, rows, candidates);
    if (!split) return node;

    node->feature = split->feature;
    node->categorical = split->categorical;
    node->threshold = split->threshold;

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (std::size_t r : rows) {
        const double v = data.row(r)[split->feature];
        const bool goes_left = split->categorical ? v == split->threshold : v <= split->threshold;
        (goes_left ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    node->left = build_node(data, left_rows, config, depth + 1, rng, max_features);
    node->right = build_node(data, right_rows, config, depth + 1, rng, max_features);
    return node;
}

std::size_t resolve_max_features(const ForestConfig& config, std::size_t d) {
    if (config.max_features == kAutoMaxFeatures) {
        return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    }
    return config.max_features;
}

}  // namespace

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features) {
    if (rows.empty()) return std::nullopt;
    const auto parent_counts = count_classes(data, rows);
    const double parent_gini = gini_from_counts(parent_counts, rows.size());

    std::optional<SplitCandidate> best;
    std::vector<ValueLabel> scratch;
    for (std::size_t f : features) {
        if (data.schema.kinds[f] == FeatureKind::categorical) {
            scan_categorical(data, rows, f, parent_counts, parent_gini, best);
        } else {
            scan_numeric(data, rows, f, parent_counts, parent_gini, best, scratch);
        }
    }
    return best;
}

std::unique_ptr<TreeNode> fit_tree(const Dataset& data, const ForestConfig& config, Rng& rng) {
    if (data.n() == 0) throw DataError("cannot fit a tree on an empty dataset");
    std::vector<std::size_t> rows(data.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return build_node(data, rows, config, 0, rng, resolve_max_features(config, data.d()));
}

RandomForestModel fit_forest(const Dataset& data, const ForestConfig& config) {
    if (data.n() == 0) throw DataError("cannot fit a forest on an empty dataset");
    if (config.n_trees < 1) throw InvalidConfig("n_trees must be >= 1");
    if (config.max_features < 1) throw InvalidConfig("max_features must be >= 1");
    if (config.max_features != kAutoMaxFeatures && config.max_features > data.d()) {
        throw InvalidConfig("max_features " + std::to_string(config.max_features) + " exceeds " +
                            std::to_string(data.d()) + " features");
    }

    RandomForestModel model;
    model.config = config;
    model.schema = data.schema;
    model.classes = data.classes;
    model.trees.reserve(config.n_trees);

    const std::size_t max_features = resolve_max_features(config, data.d());
    for (std::size_t t = 0; t < config.n_trees; ++t) {
        Rng rng(config.seed + t);
        std::vector<std::size_t> rows;
        rows.reserve(data.n());
        if (config.bootstrap) {
            for (std::size_t i = 0; i < data.n(); ++i) {
                rows.push_back(static_cast<std::size_t>(rng.bounded(data.n())));
            }
        } else {
            for (std::size_t i = 0; i < data.n(); ++i) rows.push_back(i);
        }
        model.trees.push_back(build_node(data, rows, config, 0, rng, max_features));
    }
    return model;
}

std::size_t RandomForestModel::class_index(std::string_view label) const {
    const auto it = std::lower_bound(classes.begin(), classes.end(), label);
    if (it == classes.end() || *it != label) return npos;
    return static_cast<std::size_t>(it - classes.begin());
}

Prediction predict(const RandomForestModel& model, std::span<const double> x) {
    if (x.size() != model.schema.size()) {
        throw SchemaMismatch("input has " + std::to_string(x.size()) + " features, model expects " +
                             std::to_string(model.schema.size()));
    }
    Prediction pred;
    pred.vote_shares.assign(model.classes.size(), 0.0);
    for (const auto& tree : model.trees) {
        const TreeNode* node = tree.get();
        while (!node->is_leaf()) {
            const double v = x[node->feature];
            const bool goes_left = node->categorical ? v == node->threshold : v <= node->threshold;
            node = goes_left ? node->left.get() : node->right.get();
        }
        pred.vote_shares[node->majority_class()] += 1.0;
    }
    const auto nt = static_cast<double>(model.trees.size());
    for (auto& s : pred.vote_shares) s /= nt;
    pred.class_index = 0;
    for (std::size_t k = 1; k < pred.vote_shares.size(); ++k) {
        if (pred.vote_shares[k] > pred.vote_shares[pred.class_index]) pred.class_index = k;
    }
    return pred;
}

namespace {

std::uint64_t sum_counts(const std::vector<std::uint64_t>& counts) {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

double node_impurity(const TreeNode& node, std::size_t one_vs_rest_class) {
    const std::uint64_t total = sum_counts(node.counts);
    if (one_vs_rest_class == TreeNode::npos) return gini_from_counts(node.counts, total);
    if (total == 0) return 0.0;
    const auto p = static_cast<double>(node.counts[one_vs_rest_class]) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

void accumulate_importances(const TreeNode& node, double n_root, std::size_t one_vs_rest_class,
                            std::vector<double>& acc) {
    if (node.is_leaf()) return;
    const auto n = static_cast<double>(sum_counts(node.counts));
    const auto nl = static_cast<double>(sum_counts(node.left->counts));
    const auto nr = static_cast<double>(sum_counts(node.right->counts));
    const double decrease = node_impurity(node, one_vs_rest_class) -
                            (nl / n) * node_impurity(*node.left, one_vs_rest_class) -
                            (nr / n) * node_impurity(*node.right, one_vs_rest_class);
    acc[node.feature] += decrease * (n / n_root);
    accumulate_importances(*node.left, n_root, one_vs_rest_class, acc);
    accumulate_importances(*node.right, n_root, one_vs_rest_class, acc);
}

std::vector<double> importances_impl(const RandomForestModel& model, std::size_t one_vs_rest_class) {
    std::vector<double> acc(model.schema.size(), 0.0);
    for (const auto& tree : model.trees) {
        accumulate_importances(*tree, static_cast<double>(sum_counts(tree->counts)),
                               one_vs_rest_class, acc);
    }
    double total = 0.0;
    for (auto& v : acc) {
        v /= static_cast<double>(model.trees.size());
        total += v;
    }
    if (total > 0.0) {
        for (auto& v : acc) v /= total;
    }
    return acc;
}

}  // namespace

std::vector<double> feature_importances(const RandomForestModel& model) {
    return importances_impl(model, TreeNode::npos);
}

std::vector<double> class_feature_importances(const RandomForestModel& model,
                                              std::size_t class_index) {
    if (class_index >= model.classes.size()) throw DataError("class index out of range");
    return importances_impl(model, class_index);
}

std::string importances_tsv(const FeatureSchema& schema, std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::ostringstream os;
    os << "feature\tscore\n";
    for (std::size_t i : order) os << schema.names[i] << '\t' << fmt_g17(scores[i]) << '\n';
    return os.str();
}

namespace {

constexpr std::string_view kModelMagic = "actmon-rf";
constexpr int kModelVersion = 1;

void write_node(std::ostringstream& os, const TreeNode& node) {
    if (node.is_leaf()) {
        os << 'L';
        for (auto c : node.counts) os << ' ' << c;
        os << '\n';
        return;
    }
    os << "S " << node.feature << ' ' << (node.categorical ? 'c' : 'n') << ' '
       << fmt_g17(node.threshold);
    for (auto c : node.counts) os << ' ' << c;
    os << '\n';
    write_node(os, *node.left);
    write_node(os, *node.right);
}

// Owns the current line so the string_views handed out by split_fields stay
// valid until the following next() call.
class LineReader {
public:
    explicit LineReader(const std::string& text) : in_(text) {}

    const std::string& next() {
        while (std::getline(in_, current_)) {
            if (!current_.empty() && current_.back() == '\r') current_.pop_back();
            if (!trim(current_).empty()) return current_;
        }
        throw CorruptModel("model file truncated");
    }

private:
    std::istringstream in_;
    std::string current_;
};

std::unique_ptr<TreeNode> read_node(LineReader& reader, std::size_t n_classes) {
    const std::string line = reader.next();
    const auto fields = split_fields(line);
    auto node = std::make_unique<TreeNode>();
    if (fields[0] == "L") {
        if (fields.size() != n_classes + 1) throw CorruptModel("leaf count arity mismatch");
        for (std::size_t i = 0; i < n_classes; ++i) {
            node->counts.push_back(static_cast<std::uint64_t>(parse_int(fields[i + 1], "leaf count")));
        }
        return node;
    }
    if (fields[0] != "S" || fields.size() != n_classes + 4) throw CorruptModel("bad node line: " + line);
    node->feature = static_cast<std::size_t>(parse_int(fields[1], "split feature"));
    if (fields[2] != "n" && fields[2] != "c") throw CorruptModel("bad split kind: " + line);
    node->categorical = fields[2] == "c";
    node->threshold = parse_double(fields[3], "split threshold");
    for (std::size_t i = 0; i < n_classes; ++i) {
        node->counts.push_back(static_cast<std::uint64_t>(parse_int(fields[i + 4], "node count")));
    }
    node->left = read_node(reader, n_classes);
    node->right = read_node(reader, n_classes);
    return node;
}

std::vector<std::string_view> expect_kv(const std::string& line, std::string_view key) {
    const auto fields = split_fields(line);
    if (fields.size() < 2 || fields[0] != key) {
        throw CorruptModel("expected '" + std::string(key) + "' line, got: " + line);
    }
    return fields;
}

}  // namespace

std::string save_model(const RandomForestModel& model) {
    std::ostringstream os;
    os << kModelMagic << ' ' << kModelVersion << '\n';
    os << "n_trees " << model.config.n_trees << '\n';
    os << "max_depth ";
    if (model.config.max_depth == kUnboundedDepth) {
        os << "none";
    } else {
        os << model.config.max_depth;
    }
    os << '\n';
    os << "min_samples_split " << model.config.min_samples_split << '\n';
    os << "max_features ";
    if (model.config.max_features == kAutoMaxFeatures) {
        os << "auto";
    } else {
        os << model.config.max_features;
    }
    os << '\n';
    os << "bootstrap " << (model.config.bootstrap ? 1 : 0) << '\n';
    os << "seed " << model.config.seed << '\n';
    os << "classes " << model.classes.size() << '\n';
    for (const auto& c : model.classes) os << c << '\n';
    os << "features " << model.schema.size() << '\n';
    for (std::size_t i = 0; i < model.schema.size(); ++i) {
        os << model.schema.names[i] << ' '
           << (model.schema.kinds[i] == FeatureKind::categorical ? "categorical" : "numeric") << '\n';
    }
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        os << "tree " << t << '\n';
        write_node(os, *model.trees[t]);
    }
    os << "end\n";
    return os.str();
}

namespace {

RandomForestModel load_model_impl(const std::string& text);

}  // namespace

RandomForestModel load_model(const std::string& text) {
    try {
        return load_model_impl(text);
    } catch (const ModelError&) {
        throw;
    } catch (const DataError& e) {
        throw CorruptModel(e.what());
    }
}

namespace {

RandomForestModel load_model_impl(const std::string& text) {
    LineReader reader(text);
    RandomForestModel model;
    {
        const auto fields = split_fields(reader.next());
        if (fields.size() != 2 || fields[0] != kModelMagic) {
            throw CorruptModel("not a forest model file");
        }
        const auto version = parse_int(fields[1], "model version");
        if (version != kModelVersion) {
            throw VersionMismatch("forest model version " + std::to_string(version) +
                                  " unsupported (expected " + std::to_string(kModelVersion) + ")");
        }
    }
    model.config.n_trees =
        static_cast<std::size_t>(parse_int(expect_kv(reader.next(), "n_trees")[1], "n_trees"));
    {
        const auto fields = expect_kv(reader.next(), "max_depth");
        model.config.max_depth =
            fields[1] == "none" ? kUnboundedDepth
                                : static_cast<std::size_t>(parse_int(fields[1], "max_depth"));
    }
    model.config.min_samples_split = static_cast<std::size_t>(
        parse_int(expect_kv(reader.next(), "min_samples_split")[1], "min_samples_split"));
    {
        const auto fields = expect_kv(reader.next(), "max_features");
        model.config.max_features =
            fields[1] == "auto" ? kAutoMaxFeatures
                                : static_cast<std::size_t>(parse_int(fields[1], "max_features"));
    }
    model.config.bootstrap = parse_int(expect_kv(reader.next(), "bootstrap")[1], "bootstrap") != 0;
    model.config.seed =
        static_cast<std::uint64_t>(parse_int(expect_kv(reader.next(), "seed")[1], "seed"));

    const auto n_classes =
        static_cast<std::size_t>(parse_int(expect_kv(reader.next(), "classes")[1], "classes"));
    for (std::size_t i = 0; i < n_classes; ++i) model.classes.push_back(reader.next());

    const auto n_features =
        static_cast<std::size_t>(parse_int(expect_kv(reader.next(), "features")[1], "features"));
    for (std::size_t i = 0; i < n_features; ++i) {
        const auto fields = split_fields(reader.next());
        if (fields.size() != 2) throw CorruptModel("bad feature line");
        model.schema.names.emplace_back(fields[0]);
        if (fields[1] == "categorical") {
            model.schema.kinds.push_back(FeatureKind::categorical);
        } else if (fields[1] == "numeric") {
            model.schema.kinds.push_back(FeatureKind::numeric);
        } else {
            throw CorruptModel("bad feature kind: " + std::string(fields[1]));
        }
    }

    for (std::size_t t = 0; t < model.config.n_trees; ++t) {
        const auto fields = expect_kv(reader.next(), "tree");
        if (fields.size() != 2 || static_cast<std::size_t>(parse_int(fields[1], "tree index")) != t) {
            throw CorruptModel("tree header mismatch");
        }
        model.trees.push_back(read_node(reader, n_classes));
    }
    if (reader.next() != "end") throw CorruptModel("missing end marker");
    return model;
}

}  // namespace

void save_model_file(const RandomForestModel& model, const std::string& path) {
    write_file(path, save_model(model));
}

RandomForestModel load_model_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw ModelMissing(e.what());
    }
    return load_model(text);
}

}  // namespace actmon
