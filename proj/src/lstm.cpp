#include "actmon/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "actmon/errors.hpp"
#include "actmon/kernels.hpp"
#include "actmon/rng.hpp"
#include "actmon/textio.hpp"

namespace actmon {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// out = W h + V x + b, W row-major hidden x hidden, V hidden x input.
void gate_preactivation(const LSTMCellParams& p, Gate g, std::span<const double> h,
                        std::span<const double> x, std::span<double> out) {
    const auto& ops = kern::active();
    const std::size_t hidden = p.layout.hidden;
    const std::size_t input = p.layout.input;
    const auto wh = p.weight_h(g);
    const auto wx = p.weight_x(g);
    const auto b = p.bias(g);
    for (std::size_t r = 0; r < hidden; ++r) {
        out[r] = ops.dot(wh.data() + r * hidden, h.data(), hidden) +
                 ops.dot(wx.data() + r * input, x.data(), input) + b[r];
    }
}

}  // namespace

LSTMState cell_forward(const LSTMCellParams& params, std::span<const double> x,
                       const LSTMState& prev, StepCache* cache) {
    const std::size_t hidden = params.layout.hidden;
    if (x.size() != params.layout.input || prev.h.size() != hidden || prev.c.size() != hidden) {
        throw ShapeMismatch("cell_forward input shapes do not match the layout");
    }

    std::vector<double> zf(hidden), zi(hidden), zc(hidden), zo(hidden);
    gate_preactivation(params, Gate::forget, prev.h, x, zf);
    gate_preactivation(params, Gate::input, prev.h, x, zi);
    gate_preactivation(params, Gate::candidate, prev.h, x, zc);
    gate_preactivation(params, Gate::output, prev.h, x, zo);

    LSTMState next;
    next.h.resize(hidden);
    next.c.resize(hidden);
    std::vector<double> f(hidden), i(hidden), c_tilde(hidden), o(hidden), tanh_c(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        f[r] = sigmoid(zf[r]);
        i[r] = sigmoid(zi[r]);
        c_tilde[r] = std::tanh(zc[r]);
        next.c[r] = f[r] * prev.c[r] + i[r] * c_tilde[r];
        o[r] = sigmoid(zo[r]);
        tanh_c[r] = std::tanh(next.c[r]);
        next.h[r] = o[r] * tanh_c[r];
    }

    if (cache != nullptr) {
        cache->x.assign(x.begin(), x.end());
        cache->h_prev = prev.h;
        cache->c_prev = prev.c;
        cache->f = std::move(f);
        cache->i = std::move(i);
        cache->c_tilde = std::move(c_tilde);
        cache->o = std::move(o);
        cache->c = next.c;
        cache->tanh_c = std::move(tanh_c);
    }
    return next;
}

MinMaxScaler fit_scaler(std::span<const double> values) {
    MinMaxScaler scaler;
    if (values.empty()) throw DataError("cannot fit a scaler on no values");
    kern::active().min_max(values.data(), values.size(), &scaler.lo, &scaler.hi);
    scaler.degenerate = scaler.hi == scaler.lo;
    return scaler;
}

namespace {

std::vector<double> head_apply(std::span<const double> params, const LSTMLayout& layout,
                               std::span<const double> h) {
    const auto& ops = kern::active();
    std::vector<double> y(layout.horizon);
    const double* w = params.data() + layout.head_w_offset();
    const double* b = params.data() + layout.head_b_offset();
    for (std::size_t j = 0; j < layout.horizon; ++j) {
        y[j] = ops.dot(w + j * layout.hidden, h.data(), layout.hidden) + b[j];
    }
    return y;
}

std::vector<double> run_sequence(std::span<const double> params, const LSTMLayout& layout,
                                 std::span<const double> window, std::vector<StepCache>* caches,
                                 LSTMState* final_state) {
    const LSTMCellParams cell{params, layout};
    LSTMState state = LSTMState::zeros(layout.hidden);
    if (caches != nullptr) caches->resize(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        const std::span<const double> x(&window[t], 1);
        state = cell_forward(cell, x, state, caches != nullptr ? &(*caches)[t] : nullptr);
    }
    auto y = head_apply(params, layout, state.h);
    if (final_state != nullptr) *final_state = std::move(state);
    return y;
}

}  // namespace

std::vector<double> forward_sequence(const ForecastModel& model, std::span<const double> window) {
    if (window.size() != model.config.lookback) {
        throw BadWindowLength("window has " + std::to_string(window.size()) + " values, expected " +
                              std::to_string(model.config.lookback));
    }
    return run_sequence(model.params, model.layout(), window, nullptr, nullptr);
}

double bptt_gradients(std::span<const double> params, const LSTMLayout& layout,
                      std::span<const SequenceSample> batch, std::span<double> grad) {
    if (batch.empty()) throw DataError("bptt_gradients needs a nonempty batch");
    if (grad.size() != layout.size()) throw ShapeMismatch("gradient buffer size mismatch");
    const auto& ops = kern::active();
    const std::size_t hidden = layout.hidden;
    const std::size_t input = layout.input;
    std::fill(grad.begin(), grad.end(), 0.0);

    double loss = 0.0;
    const double denom = static_cast<double>(batch.size()) * static_cast<double>(layout.horizon);

    std::vector<StepCache> caches;
    LSTMState final_state;
    std::vector<double> dy(layout.horizon);
    std::vector<double> dh(hidden), dc(hidden);
    std::vector<double> dzf(hidden), dzi(hidden), dzc(hidden), dzo(hidden), dh_prev(hidden);

    for (const auto& sample : batch) {
        const auto y = run_sequence(params, layout, sample.window, &caches, &final_state);
        if (y.size() != sample.target.size()) throw ShapeMismatch("target size mismatch");
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double err = y[j] - sample.target[j];
            loss += err * err / denom;
            dy[j] = 2.0 * err / denom;
        }

        // Head: y = W h_T + b.
        std::fill(dh.begin(), dh.end(), 0.0);
        std::fill(dc.begin(), dc.end(), 0.0);
        double* gw_head = grad.data() + layout.head_w_offset();
        double* gb_head = grad.data() + layout.head_b_offset();
        const double* w_head = params.data() + layout.head_w_offset();
        for (std::size_t j = 0; j < layout.horizon; ++j) {
            ops.axpy(dy[j], final_state.h.data(), gw_head + j * hidden, hidden);
            gb_head[j] += dy[j];
            ops.axpy(dy[j], w_head + j * hidden, dh.data(), hidden);
        }

        for (std::size_t step = caches.size(); step-- > 0;) {
            const StepCache& cc = caches[step];
            for (std::size_t r = 0; r < hidden; ++r) {
                const double do_r = dh[r] * cc.tanh_c[r];
                dc[r] += dh[r] * cc.o[r] * (1.0 - cc.tanh_c[r] * cc.tanh_c[r]);
                dzo[r] = do_r * cc.o[r] * (1.0 - cc.o[r]);
                const double df = dc[r] * cc.c_prev[r];
                dzf[r] = df * cc.f[r] * (1.0 - cc.f[r]);
                const double di = dc[r] * cc.c_tilde[r];
                dzi[r] = di * cc.i[r] * (1.0 - cc.i[r]);
                const double dct = dc[r] * cc.i[r];
                dzc[r] = dct * (1.0 - cc.c_tilde[r] * cc.c_tilde[r]);
            }

            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
            const auto backprop_gate = [&](Gate g, const std::vector<double>& dz) {
                double* gw_h = grad.data() + layout.wh_offset(g);
                double* gw_x = grad.data() + layout.wx_offset(g);
                double* gb = grad.data() + layout.b_offset(g);
                const double* w_h = params.data() + layout.wh_offset(g);
                for (std::size_t r = 0; r < hidden; ++r) {
                    if (dz[r] != 0.0) {
                        ops.axpy(dz[r], cc.h_prev.data(), gw_h + r * hidden, hidden);
                        ops.axpy(dz[r], cc.x.data(), gw_x + r * input, input);
                        ops.axpy(dz[r], w_h + r * hidden, dh_prev.data(), hidden);
                    }
                    gb[r] += dz[r];
                }
            };
            backprop_gate(Gate::forget, dzf);
            backprop_gate(Gate::input, dzi);
            backprop_gate(Gate::candidate, dzc);
            backprop_gate(Gate::output, dzo);

            for (std::size_t r = 0; r < hidden; ++r) dc[r] *= cc.f[r];
            dh = dh_prev;
        }
    }
    if (!std::isfinite(loss)) throw NonFiniteLoss("training loss is not finite");
    return loss;
}

namespace {

std::size_t window_count(std::size_t n, const ForecastConfig& cfg) {
    return n - cfg.lookback - cfg.horizon + 1;
}

}  // namespace

ForecastModel train_forecaster(const DailySeries& series, const ForecastConfig& config,
                               TrainReport* report) {
    const std::size_t need = config.lookback + config.horizon;
    if (series.values.size() < need) {
        throw SeriesTooShort("series has " + std::to_string(series.values.size()) +
                             " days, need >= " + std::to_string(need));
    }
    if (config.hidden == 0 || config.horizon == 0 || config.lookback == 0 || config.epochs == 0) {
        throw InvalidConfig("forecaster dimensions and epochs must be positive");
    }

    const std::size_t n_windows = window_count(series.values.size(), config);
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n_windows) * config.train_ratio + 1e-9));
    if (n_train == 0) n_train = 1;

    ForecastModel model;
    model.config = config;

    // The scaler sees only the values reachable from training windows.
    const std::size_t train_value_end = n_train - 1 + config.lookback + config.horizon;
    model.scaler = fit_scaler(std::span<const double>(series.values).first(train_value_end));

    std::vector<double> scaled(series.values.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = model.scaler.scale(series.values[i]);

    std::vector<SequenceSample> train;
    train.reserve(n_train);
    for (std::size_t w = 0; w < n_train; ++w) {
        SequenceSample s;
        s.window.assign(scaled.begin() + static_cast<std::ptrdiff_t>(w),
                        scaled.begin() + static_cast<std::ptrdiff_t>(w + config.lookback));
        s.target.assign(
            scaled.begin() + static_cast<std::ptrdiff_t>(w + config.lookback),
            scaled.begin() + static_cast<std::ptrdiff_t>(w + config.lookback + config.horizon));
        train.push_back(std::move(s));
    }

    const LSTMLayout layout = model.layout();
    model.params.resize(layout.size());
    Rng rng(config.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden));
    for (auto& p : model.params) p = rng.uniform(-bound, bound);

    const auto& ops = kern::active();
    std::vector<double> grad(layout.size());
    std::vector<double> m(layout.size(), 0.0), v(layout.size(), 0.0);
    double beta1_pow = 1.0, beta2_pow = 1.0;
    double last_loss = 0.0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        last_loss = bptt_gradients(model.params, layout, train, grad);
        beta1_pow *= 0.9;
        beta2_pow *= 0.999;
        ops.adam_step(model.params.data(), grad.data(), m.data(), v.data(), layout.size(),
                      config.learning_rate, 0.9, 0.999, 1e-8, beta1_pow, beta2_pow);
    }

    if (report != nullptr) {
        report->final_train_loss = last_loss;
        report->train_windows = n_train;
        report->test_windows = n_windows - n_train;
        report->degenerate_scale = model.scaler.degenerate;
    }
    return model;
}

ForecastSkill evaluate_forecaster(const ForecastModel& model, const DailySeries& series) {
    const auto& cfg = model.config;
    const std::size_t need = cfg.lookback + cfg.horizon;
    if (series.values.size() < need) throw SeriesTooShort("series shorter than one window");
    const std::size_t n_windows = window_count(series.values.size(), cfg);
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n_windows) * cfg.train_ratio + 1e-9));
    if (n_train == 0) n_train = 1;
    if (n_train >= n_windows) throw SeriesTooShort("no held-out windows at this ratio");

    ForecastSkill skill;
    std::size_t count = 0;
    for (std::size_t w = n_train; w < n_windows; ++w) {
        const std::span<const double> window(series.values.data() + w, cfg.lookback);
        const auto result = forecast(model, window);
        const double last = window.back();
        for (std::size_t j = 0; j < cfg.horizon; ++j) {
            const double truth = series.values[w + cfg.lookback + j];
            skill.model_mse += (result.values[j] - truth) * (result.values[j] - truth);
            skill.persistence_mse += (last - truth) * (last - truth);
            ++count;
        }
    }
    skill.model_mse /= static_cast<double>(count);
    skill.persistence_mse /= static_cast<double>(count);
    return skill;
}

ForecastResult forecast(const ForecastModel& model, std::span<const double> recent_raw,
                        const std::optional<DeviationCheck>& check) {
    if (recent_raw.size() != model.config.lookback) {
        throw BadWindowLength("forecast needs exactly " + std::to_string(model.config.lookback) +
                              " recent values");
    }
    std::vector<double> scaled(recent_raw.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = model.scaler.scale(recent_raw[i]);
    const auto y = run_sequence(model.params, model.layout(), scaled, nullptr, nullptr);

    ForecastResult out;
    out.values.reserve(y.size());
    out.deviation_flags.assign(y.size(), false);
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double raw = std::max(0.0, model.scaler.unscale(y[j]));
        out.values.push_back(raw);
        if (check) {
            out.deviation_flags[j] =
                std::abs(zscore(raw, check->mean, check->stddev)) > check->z_threshold;
        }
    }
    return out;
}

namespace {

constexpr std::string_view kLstmMagic = "actmon-lstm";
constexpr int kLstmVersion = 1;

ForecastModel load_forecaster_impl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    // Returns a reference into `line` so split_fields views stay valid until
    // the next call.
    const auto next_line = [&]() -> const std::string& {
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!trim(line).empty()) return line;
        }
        throw CorruptModel("forecaster file truncated");
    };
    const auto kv = [&](std::string_view key) -> std::string {
        const auto fields = split_fields(next_line());
        if (fields.size() != 2 || fields[0] != key) {
            throw CorruptModel("expected '" + std::string(key) + "' line");
        }
        return std::string(fields[1]);
    };

    {
        const auto fields = split_fields(next_line());
        if (fields.size() != 2 || fields[0] != kLstmMagic) {
            throw CorruptModel("not a forecaster model file");
        }
        const auto version = parse_int(fields[1], "model version");
        if (version != kLstmVersion) {
            throw VersionMismatch("forecaster model version " + std::to_string(version) +
                                  " unsupported");
        }
    }
    ForecastModel model;
    model.config.hidden = static_cast<std::size_t>(parse_int(kv("hidden"), "hidden"));
    model.config.lookback = static_cast<std::size_t>(parse_int(kv("lookback"), "lookback"));
    model.config.horizon = static_cast<std::size_t>(parse_int(kv("horizon"), "horizon"));
    model.config.epochs = static_cast<std::size_t>(parse_int(kv("epochs"), "epochs"));
    model.config.learning_rate = parse_double(kv("learning_rate"), "learning_rate");
    model.config.train_ratio = parse_double(kv("train_ratio"), "train_ratio");
    model.config.seed = static_cast<std::uint64_t>(parse_int(kv("seed"), "seed"));
    {
        const auto fields = split_fields(next_line());
        if (fields.size() != 4 || fields[0] != "scaler") throw CorruptModel("bad scaler line");
        model.scaler.lo = parse_double(fields[1], "scaler lo");
        model.scaler.hi = parse_double(fields[2], "scaler hi");
        model.scaler.degenerate = parse_int(fields[3], "scaler flag") != 0;
    }
    const auto n_params = static_cast<std::size_t>(parse_int(kv("params"), "params"));
    if (n_params != model.layout().size()) {
        throw CorruptModel("parameter count does not match the layout");
    }
    model.params.reserve(n_params);
    while (model.params.size() < n_params) {
        for (const auto field : split_fields(next_line())) {
            model.params.push_back(parse_double(field, "parameter"));
        }
    }
    if (model.params.size() != n_params) throw CorruptModel("too many parameters");
    if (next_line() != "end") throw CorruptModel("missing end marker");
    return model;
}

}  // namespace

std::string save_forecaster(const ForecastModel& model) {
    std::ostringstream os;
    os << kLstmMagic << ' ' << kLstmVersion << '\n';
    os << "hidden " << model.config.hidden << '\n';
    os << "lookback " << model.config.lookback << '\n';
    os << "horizon " << model.config.horizon << '\n';
    os << "epochs " << model.config.epochs << '\n';
    os << "learning_rate " << fmt_g17(model.config.learning_rate) << '\n';
    os << "train_ratio " << fmt_g17(model.config.train_ratio) << '\n';
    os << "seed " << model.config.seed << '\n';
    os << "scaler " << fmt_g17(model.scaler.lo) << ' ' << fmt_g17(model.scaler.hi) << ' '
       << (model.scaler.degenerate ? 1 : 0) << '\n';
    os << "params " << model.params.size() << '\n';
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        os << fmt_g17(model.params[i]);
        os << ((i % 8 == 7 || i + 1 == model.params.size()) ? '\n' : ' ');
    }
    os << "end\n";
    return os.str();
}

ForecastModel load_forecaster(const std::string& text) {
    try {
        return load_forecaster_impl(text);
    } catch (const ModelError&) {
        throw;
    } catch (const DataError& e) {
        throw CorruptModel(e.what());
    }
}

void save_forecaster_file(const ForecastModel& model, const std::string& path) {
    write_file(path, save_forecaster(model));
}

ForecastModel load_forecaster_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw ModelMissing(e.what());
    }
    return load_forecaster(text);
}

}  // namespace actmon
