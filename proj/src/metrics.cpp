#include "actmon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "actmon/errors.hpp"
#include "actmon/textio.hpp"

namespace actmon {

std::optional<double> auc_score(std::span<const double> scores, const std::vector<bool>& positive) {
    std::size_t n_pos = 0;
    for (bool p : positive) n_pos += p ? 1 : 0;
    const std::size_t n_neg = positive.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    // Mann-Whitney rank sum with midranks for ties.
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (positive[order[k]]) pos_rank_sum += midrank;
        }
        i = j;
    }
    const auto np = static_cast<double>(n_pos);
    const auto nn = static_cast<double>(n_neg);
    const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

std::vector<RocPoint> roc_points(std::span<const double> scores, const std::vector<bool>& positive) {
    std::size_t n_pos = 0;
    for (bool p : positive) n_pos += p ? 1 : 0;
    const std::size_t n_neg = positive.size() - n_pos;
    std::vector<RocPoint> points{{0.0, 0.0}};
    if (n_pos == 0 || n_neg == 0) return points;

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (positive[order[k]]) ++tp;
            else ++fp;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    return points;
}

EvalReport evaluate(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                    std::span<const double> scores, const std::vector<std::string>& classes) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("y_true/y_pred size mismatch");
    const std::size_t n = y_true.size();
    const std::size_t k = classes.size();
    if (n == 0) throw LengthMismatch("cannot evaluate zero predictions");
    const bool have_scores = !scores.empty();
    if (have_scores && scores.size() != n * k) throw LengthMismatch("scores must be n x |classes|");

    EvalReport report;
    report.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        report.confusion[y_true[i]][y_pred[i]] += 1;
        if (y_true[i] == y_pred[i]) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);

    for (std::size_t c = 0; c < k; ++c) {
        ClassMetrics m;
        m.label = classes[c];
        std::uint64_t tp = report.confusion[c][c];
        std::uint64_t fn = 0, fp = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j != c) {
                fn += report.confusion[c][j];
                fp += report.confusion[j][c];
            }
        }
        m.support = static_cast<std::size_t>(tp + fn);
        m.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        m.recall = m.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.support);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        report.per_class.push_back(std::move(m));
    }

    for (const auto& m : report.per_class) {
        const double w = static_cast<double>(m.support) / static_cast<double>(n);
        report.weighted_precision += w * m.precision;
        report.weighted_recall += w * m.recall;
        report.weighted_f1 += w * m.f1;
    }

    if (have_scores) {
        double auc_sum = 0.0;
        std::size_t auc_support = 0;
        std::optional<std::size_t> binary_positive;
        std::size_t present_classes = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (report.per_class[c].support > 0) {
                ++present_classes;
                binary_positive = c;
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (report.per_class[c].support == 0) continue;
            std::vector<double> s(n);
            std::vector<bool> pos(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = scores[i * k + c];
                pos[i] = y_true[i] == c;
            }
            const auto a = auc_score(s, pos);
            if (a) {
                auc_sum += *a * static_cast<double>(report.per_class[c].support);
                auc_support += report.per_class[c].support;
            }
        }
        if (auc_support > 0) report.auc = auc_sum / static_cast<double>(auc_support);

        // ROC staircase only meaningful for a two-class task; use the
        // lexicographically larger present class as positive.
        if (present_classes == 2 && k == 2 && binary_positive) {
            std::vector<double> s(n);
            std::vector<bool> pos(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = scores[i * k + *binary_positive];
                pos[i] = y_true[i] == *binary_positive;
            }
            report.roc = roc_points(s, pos);
        }
    }
    return report;
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    os << "accuracy " << fmt_fixed(accuracy, 6) << "\n\n";
    os << "class                     support  precision  recall    f1\n";
    for (const auto& m : per_class) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-25s %7zu  %8.6f  %8.6f  %8.6f\n", m.label.c_str(),
                      m.support, m.precision, m.recall, m.f1);
        os << buf;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-25s %7s  %8.6f  %8.6f  %8.6f\n", "weighted avg", "",
                  weighted_precision, weighted_recall, weighted_f1);
    os << buf;
    if (auc) {
        os << "auc " << fmt_fixed(*auc, 6) << "\n";
    } else {
        os << "auc undefined\n";
    }
    return os.str();
}

std::string EvalReport::to_kv() const {
    std::ostringstream os;
    os << "accuracy " << fmt_g17(accuracy) << '\n';
    os << "weighted_precision " << fmt_g17(weighted_precision) << '\n';
    os << "weighted_recall " << fmt_g17(weighted_recall) << '\n';
    os << "weighted_f1 " << fmt_g17(weighted_f1) << '\n';
    if (auc) os << "auc " << fmt_g17(*auc) << '\n';
    for (const auto& m : per_class) {
        os << "class " << m.label << ' ' << m.support << ' ' << fmt_g17(m.precision) << ' '
           << fmt_g17(m.recall) << ' ' << fmt_g17(m.f1) << '\n';
    }
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        os << "confusion " << per_class[i].label;
        for (auto v : confusion[i]) os << ' ' << v;
        os << '\n';
    }
    return os.str();
}

std::string EvalReport::roc_tsv() const {
    std::ostringstream os;
    os << "fpr\ttpr\n";
    for (const auto& p : roc) os << fmt_g17(p.fpr) << '\t' << fmt_g17(p.tpr) << '\n';
    return os.str();
}

TrainTestSplit split_train_test(std::size_t n, double ratio, std::uint64_t seed,
                                std::span<const std::size_t> labels) {
    if (n < 2) throw DataError("need at least 2 rows to split");
    if (ratio <= 0.0 || ratio >= 1.0) throw InvalidConfig("split ratio must be in (0, 1)");
    Rng rng(seed);
    TrainTestSplit split;

    if (labels.empty()) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
        split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
        return split;
    }

    if (labels.size() != n) throw LengthMismatch("labels/rows size mismatch");
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    for (auto& [label, idx] : by_class) {
        rng.shuffle(idx);
        const auto n_train = static_cast<std::size_t>(
            std::llround(static_cast<double>(idx.size()) * ratio));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? split.train : split.test).push_back(idx[i]);
        }
    }
    rng.shuffle(split.train);
    rng.shuffle(split.test);
    return split;
}

TrainTestSplit split_chronological(std::size_t n, double ratio) {
    if (n < 2) throw DataError("need at least 2 rows to split");
    if (ratio <= 0.0 || ratio >= 1.0) throw InvalidConfig("split ratio must be in (0, 1)");
    TrainTestSplit split;
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
    for (std::size_t i = 0; i < n; ++i) (i < n_train ? split.train : split.test).push_back(i);
    return split;
}

}  // namespace actmon
