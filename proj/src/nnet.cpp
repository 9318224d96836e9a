#include "nsx/nnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nsx/error.hpp"
#include "nsx/kernels.hpp"
#include "nsx/rng.hpp"

namespace nsx {

void MlpModel::validate() const {
    if (layer_sizes.size() < 2) throw FileFormatError("model needs at least input and output layers");
    for (int s : layer_sizes)
        if (s <= 0) throw FileFormatError("non-positive layer size");
    const size_t nlayers = layer_sizes.size() - 1;
    if (weights.size() != nlayers || biases.size() != nlayers)
        throw FileFormatError("model shape mismatch: layer count");
    for (size_t l = 0; l < nlayers; ++l) {
        const size_t rows = size_t(layer_sizes[l + 1]);
        const size_t cols = size_t(layer_sizes[l]);
        if (weights[l].size() != rows * cols || biases[l].size() != rows)
            throw FileFormatError("model shape mismatch: layer " + std::to_string(l));
        for (double w : weights[l])
            if (!std::isfinite(w)) throw FileFormatError("non-finite weight");
        for (double b : biases[l])
            if (!std::isfinite(b)) throw FileFormatError("non-finite bias");
    }
    if (input_names.size() != size_t(input_dim()) || output_names.size() != size_t(output_dim()))
        throw FileFormatError("model shape mismatch: name lists");
    if (input_stats.size() != input_names.size() || output_stats.size() != output_names.size())
        throw FileFormatError("model shape mismatch: stats lists");
    for (const auto& s : input_stats)
        if (!(s.stdev > 0.0)) throw FileFormatError("non-positive input stdev");
    for (const auto& s : output_stats)
        if (!(s.stdev > 0.0)) throw FileFormatError("non-positive output stdev");
}

namespace {

// Forward through the layers on an already-standardized input; fills
// pre-activations per layer when `pre` is non-null (needed for backprop).
void forward_std(const MlpModel& m, const std::vector<double>& xs, std::vector<double>& out,
                 std::vector<std::vector<double>>* pre) {
    const size_t nlayers = m.weights.size();
    std::vector<double> cur = xs;
    std::vector<double> next;
    for (size_t l = 0; l < nlayers; ++l) {
        const size_t rows = size_t(m.layer_sizes[l + 1]);
        const size_t cols = size_t(m.layer_sizes[l]);
        next.resize(rows);
        kern::matvec(m.weights[l].data(), rows, cols, cur.data(), m.biases[l].data(), next.data());
        if (pre) (*pre)[l] = next;
        if (l + 1 < nlayers) kern::relu(next.data(), rows); // identity on the output layer
        cur.swap(next);
    }
    out = std::move(cur);
}

} // namespace

std::vector<double> predict_raw(const MlpModel& m, const std::vector<double>& x) {
    if (x.size() != size_t(m.input_dim())) throw Error("predict: input dimension mismatch");
    std::vector<double> xs(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        xs[i] = (x[i] - m.input_stats[i].mean) / m.input_stats[i].stdev;
    std::vector<double> ys;
    forward_std(m, xs, ys, nullptr);
    for (size_t j = 0; j < ys.size(); ++j)
        ys[j] = ys[j] * m.output_stats[j].stdev + m.output_stats[j].mean;
    return ys;
}

Assignment predict(const MlpModel& m, const Assignment& a) {
    std::vector<double> x(m.input_names.size());
    for (size_t i = 0; i < m.input_names.size(); ++i) {
        auto it = a.find(m.input_names[i]);
        if (it == a.end()) throw EvalError("predict: missing input binding '" + m.input_names[i] + "'");
        x[i] = it->second.num();
    }
    const std::vector<double> y = predict_raw(m, x);
    Assignment out;
    for (size_t j = 0; j < m.output_names.size(); ++j)
        out[m.output_names[j]] = TypedValue::of_real(y[j]);
    return out;
}

std::vector<double> input_gradient(const MlpModel& m, const std::vector<double>& x,
                                   const std::vector<double>& downstream) {
    if (downstream.size() != size_t(m.output_dim()))
        throw Error("input_gradient: downstream dimension mismatch");
    std::vector<double> xs(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        xs[i] = (x[i] - m.input_stats[i].mean) / m.input_stats[i].stdev;

    const size_t nlayers = m.weights.size();
    std::vector<std::vector<double>> pre(nlayers);
    std::vector<double> ys;
    forward_std(m, xs, ys, &pre);

    // d(downstream . y_raw)/d(z_last) = downstream * output stdev
    std::vector<double> delta(m.output_dim());
    for (size_t j = 0; j < delta.size(); ++j) delta[j] = downstream[j] * m.output_stats[j].stdev;

    std::vector<double> prev;
    for (size_t l = nlayers; l-- > 0;) {
        const size_t rows = size_t(m.layer_sizes[l + 1]);
        const size_t cols = size_t(m.layer_sizes[l]);
        prev.resize(cols);
        kern::matvec_t(m.weights[l].data(), rows, cols, delta.data(), prev.data());
        if (l > 0) kern::relu_mask(pre[l - 1].data(), prev.data(), cols);
        delta.swap(prev);
    }
    for (size_t i = 0; i < delta.size(); ++i) delta[i] /= m.input_stats[i].stdev;
    return delta;
}

bool value_matches(Kind kind, double predicted, double actual) {
    if (kind == Kind::Int) return std::llround(predicted) == std::llround(actual);
    return std::fabs(predicted - actual) <= 1e-2 * std::max(1.0, std::fabs(actual));
}

double accuracy(const MlpModel& m, const Dataset& held_out) {
    if (held_out.rows.empty()) throw Error("accuracy: empty held-out set");
    std::vector<int> in_idx, out_idx;
    std::vector<Kind> out_kind;
    for (const auto& n : m.input_names) {
        const int i = held_out.column_index(n);
        if (i < 0) throw FileFormatError("accuracy: dataset lacks column '" + n + "'");
        in_idx.push_back(i);
    }
    for (const auto& n : m.output_names) {
        const int i = held_out.column_index(n);
        if (i < 0) throw FileFormatError("accuracy: dataset lacks column '" + n + "'");
        out_idx.push_back(i);
        out_kind.push_back(held_out.columns[i].kind);
    }
    long long right = 0;
    std::vector<double> x(in_idx.size());
    for (const auto& row : held_out.rows) {
        for (size_t i = 0; i < in_idx.size(); ++i) x[i] = row[in_idx[i]];
        const std::vector<double> y = predict_raw(m, x);
        bool ok = true;
        for (size_t j = 0; j < out_idx.size(); ++j)
            if (!value_matches(out_kind[j], y[j], row[out_idx[j]])) {
                ok = false;
                break;
            }
        if (ok) ++right;
    }
    return double(right) / double(held_out.rows.size());
}

std::vector<std::pair<std::string, double>> explain(const MlpModel& m) {
    // total = |W_L| ... |W_1|, accumulated bottom-up.
    const size_t di = size_t(m.input_dim());
    std::vector<double> total(m.weights[0].size());
    for (size_t i = 0; i < total.size(); ++i) total[i] = std::fabs(m.weights[0][i]);
    size_t rows = size_t(m.layer_sizes[1]);
    for (size_t l = 1; l < m.weights.size(); ++l) {
        const size_t next_rows = size_t(m.layer_sizes[l + 1]);
        std::vector<double> next(next_rows * di, 0.0);
        for (size_t r = 0; r < next_rows; ++r)
            for (size_t k = 0; k < rows; ++k) {
                const double w = std::fabs(m.weights[l][r * rows + k]);
                for (size_t c = 0; c < di; ++c) next[r * di + c] += w * total[k * di + c];
            }
        total.swap(next);
        rows = next_rows;
    }
    std::vector<std::pair<std::string, double>> scores(di);
    for (size_t c = 0; c < di; ++c) {
        double s = 0.0;
        for (size_t r = 0; r < rows; ++r) s += total[r * di + c];
        scores[c] = {m.input_names[c], s};
    }
    std::stable_sort(scores.begin(), scores.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return scores;
}

// ---------------------------------------------------------------------------
// Persistence: versioned text format, 17 significant digits (lossless for
// doubles), whitespace-tokenized.

namespace {

void put_num(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

struct TokenReader {
    std::istringstream in;
    explicit TokenReader(const std::string& text) : in(text) {}

    std::string word(const char* what) {
        std::string w;
        if (!(in >> w)) throw FileFormatError(std::string("truncated model file: ") + what + " expected");
        return w;
    }
    double number(const char* what) {
        const std::string w = word(what);
        double v = 0.0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
        if (ec != std::errc() || p != w.data() + w.size())
            throw FileFormatError(std::string("malformed model file: bad number for ") + what);
        return v;
    }
    long long integer(const char* what) {
        const double v = number(what);
        if (v != std::floor(v)) throw FileFormatError(std::string("malformed model file: ") + what);
        return (long long)v;
    }
    void expect(const char* kw) {
        if (word(kw) != kw)
            throw FileFormatError(std::string("malformed model file: '") + kw + "' expected");
    }
};

} // namespace

std::string save_to_string(const MlpModel& m) {
    m.validate();
    std::string out = "nsxmodel v1\n";
    out += "layer_sizes";
    for (int s : m.layer_sizes) out += " " + std::to_string(s);
    out += "\ninputs " + std::to_string(m.input_names.size());
    for (const auto& n : m.input_names) out += " " + n;
    out += "\noutputs " + std::to_string(m.output_names.size());
    for (const auto& n : m.output_names) out += " " + n;
    out += "\ninput_stats\n";
    for (const auto& s : m.input_stats) {
        put_num(out, s.mean);
        out += " ";
        put_num(out, s.stdev);
        out += "\n";
    }
    out += "output_stats\n";
    for (const auto& s : m.output_stats) {
        put_num(out, s.mean);
        out += " ";
        put_num(out, s.stdev);
        out += "\n";
    }
    for (size_t l = 0; l < m.weights.size(); ++l) {
        const size_t rows = size_t(m.layer_sizes[l + 1]);
        const size_t cols = size_t(m.layer_sizes[l]);
        out += "layer " + std::to_string(l) + " " + std::to_string(rows) + " " +
               std::to_string(cols) + "\n";
        for (size_t r = 0; r < rows; ++r) {
            for (size_t c = 0; c < cols; ++c) {
                if (c) out += " ";
                put_num(out, m.weights[l][r * cols + c]);
            }
            out += "\n";
        }
        out += "bias";
        for (size_t r = 0; r < rows; ++r) {
            out += " ";
            put_num(out, m.biases[l][r]);
        }
        out += "\n";
    }
    out += "end\n";
    return out;
}

MlpModel load_from_string(const std::string& text) {
    TokenReader r(text);
    if (r.word("magic") != "nsxmodel" || r.word("version") != "v1")
        throw FileFormatError("not an nsxmodel v1 file");
    MlpModel m;
    r.expect("layer_sizes");
    // sizes run until the "inputs" keyword
    std::string w = r.word("layer size");
    while (w != "inputs") {
        double v = 0.0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
        if (ec != std::errc() || p != w.data() + w.size() || v != std::floor(v) || v <= 0)
            throw FileFormatError("malformed model file: bad layer size");
        m.layer_sizes.push_back(int(v));
        w = r.word("layer size or inputs");
    }
    if (m.layer_sizes.size() < 2) throw FileFormatError("model needs at least two layers");
    {
        const long long n = r.integer("input count");
        for (long long i = 0; i < n; ++i) m.input_names.push_back(r.word("input name"));
    }
    r.expect("outputs");
    {
        const long long n = r.integer("output count");
        for (long long i = 0; i < n; ++i) m.output_names.push_back(r.word("output name"));
    }
    r.expect("input_stats");
    for (size_t i = 0; i < m.input_names.size(); ++i)
        m.input_stats.push_back({r.number("input mean"), r.number("input stdev")});
    r.expect("output_stats");
    for (size_t i = 0; i < m.output_names.size(); ++i)
        m.output_stats.push_back({r.number("output mean"), r.number("output stdev")});
    const size_t nlayers = m.layer_sizes.size() - 1;
    for (size_t l = 0; l < nlayers; ++l) {
        r.expect("layer");
        if (r.integer("layer index") != (long long)l)
            throw FileFormatError("malformed model file: layer index");
        const long long rows = r.integer("rows");
        const long long cols = r.integer("cols");
        if (rows != m.layer_sizes[l + 1] || cols != m.layer_sizes[l])
            throw FileFormatError("model shape mismatch: layer " + std::to_string(l) +
                                  " declared shape disagrees with layer_sizes");
        std::vector<double> wts(static_cast<size_t>(rows * cols));
        for (auto& x : wts) x = r.number("weight");
        r.expect("bias");
        std::vector<double> bs(static_cast<size_t>(rows));
        for (auto& x : bs) x = r.number("bias");
        m.weights.push_back(std::move(wts));
        m.biases.push_back(std::move(bs));
    }
    r.expect("end");
    m.validate();
    return m;
}

void save(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileFormatError("cannot write model file '" + path + "'");
    const std::string text = save_to_string(m);
    out.write(text.data(), std::streamsize(text.size()));
}

MlpModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_from_string(ss.str());
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Grads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
    void zero() {
        for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
        for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
    }
};

void shuffle(std::vector<int>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[size_t(rng.uniform_int(0, (long long)i - 1))]);
}

} // namespace

std::pair<MlpModel, TrainReport> train(const Dataset& data, const std::vector<std::string>& inputs,
                                       const std::vector<std::string>& outputs,
                                       const TrainConfig& cfg) {
    if (inputs.empty() || outputs.empty()) throw Error("train: empty input or output list");
    for (const auto& i : inputs)
        for (const auto& o : outputs)
            if (i == o) throw Error("train: '" + i + "' appears as both input and output");
    const size_t n = data.rows.size();
    if (n < 10) throw Error("train: need at least 10 rows");
    data.validate();

    std::vector<int> in_idx, out_idx;
    for (const auto& name : inputs) {
        const int i = data.column_index(name);
        if (i < 0) throw FileFormatError("train: dataset lacks column '" + name + "'");
        in_idx.push_back(i);
    }
    for (const auto& name : outputs) {
        const int i = data.column_index(name);
        if (i < 0) throw FileFormatError("train: dataset lacks column '" + name + "'");
        out_idx.push_back(i);
    }
    const size_t di = in_idx.size();
    const size_t d_out = out_idx.size();

    Rng rng(mix_seed(cfg.seed, 0x7261696e)); // private stream for training
    std::vector<int> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = int(i);
    shuffle(perm, rng);
    size_t val_n = size_t(std::llround(double(n) * cfg.validation_fraction));
    val_n = std::min(std::max<size_t>(val_n, 1), n - 1);
    const std::vector<int> val_rows(perm.begin(), perm.begin() + val_n);
    std::vector<int> fit_rows(perm.begin() + val_n, perm.end());

    MlpModel m;
    m.layer_sizes.push_back(int(di));
    for (int h : cfg.hidden) {
        if (h <= 0) throw Error("train: non-positive hidden width");
        m.layer_sizes.push_back(h);
    }
    m.layer_sizes.push_back(int(d_out));
    m.input_names = inputs;
    m.output_names = outputs;

    // Standardization stats over the fitting rows; constant columns get
    // stdev 1 so gradients stay well-scaled.
    auto column_stats = [&](int col) {
        double mean = 0.0;
        for (int r : fit_rows) mean += data.rows[r][col];
        mean /= double(fit_rows.size());
        double var = 0.0;
        for (int r : fit_rows) {
            const double d = data.rows[r][col] - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / double(fit_rows.size()));
        if (!(sd > 1e-12)) sd = 1.0;
        return ColumnStats{mean, sd};
    };
    for (int c : in_idx) m.input_stats.push_back(column_stats(c));
    for (int c : out_idx) m.output_stats.push_back(column_stats(c));

    for (size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const size_t rows = size_t(m.layer_sizes[l + 1]);
        const size_t cols = size_t(m.layer_sizes[l]);
        const double limit = std::sqrt(6.0 / double(rows + cols));
        std::vector<double> w(rows * cols);
        for (auto& x : w) x = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(rows, 0.0);
    }

    auto standardized = [&](const std::vector<int>& rows_sel, const std::vector<int>& cols,
                            const std::vector<ColumnStats>& stats) {
        std::vector<double> out(rows_sel.size() * cols.size());
        for (size_t r = 0; r < rows_sel.size(); ++r)
            for (size_t c = 0; c < cols.size(); ++c)
                out[r * cols.size() + c] =
                    (data.rows[rows_sel[r]][cols[c]] - stats[c].mean) / stats[c].stdev;
        return out;
    };
    const std::vector<double> x_val = standardized(val_rows, in_idx, m.input_stats);
    const std::vector<double> y_val = standardized(val_rows, out_idx, m.output_stats);

    const size_t nlayers = m.weights.size();
    Grads grads;
    grads.w.resize(nlayers);
    grads.b.resize(nlayers);
    for (size_t l = 0; l < nlayers; ++l) {
        grads.w[l].resize(m.weights[l].size());
        grads.b[l].resize(m.biases[l].size());
    }

    std::vector<std::vector<double>> act(nlayers + 1);  // post-activation per layer
    std::vector<std::vector<double>> pre(nlayers);      // pre-activation per layer
    std::vector<double> delta, prev;

    auto forward_sample = [&](const double* xs) {
        act[0].assign(xs, xs + di);
        for (size_t l = 0; l < nlayers; ++l) {
            const size_t rows = size_t(m.layer_sizes[l + 1]);
            const size_t cols = size_t(m.layer_sizes[l]);
            pre[l].resize(rows);
            kern::matvec(m.weights[l].data(), rows, cols, act[l].data(), m.biases[l].data(),
                         pre[l].data());
            act[l + 1] = pre[l];
            if (l + 1 < nlayers) kern::relu(act[l + 1].data(), rows);
        }
    };

    auto val_loss_fn = [&] {
        double acc = 0.0;
        std::vector<double> out;
        for (size_t r = 0; r < val_rows.size(); ++r) {
            forward_std(m, std::vector<double>(x_val.begin() + r * di, x_val.begin() + (r + 1) * di),
                        out, nullptr);
            acc += kern::sumsq_diff(out.data(), y_val.data() + r * d_out, d_out);
        }
        return acc / double(val_rows.size() * d_out);
    };

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_w = m.weights;
    std::vector<std::vector<double>> best_b = m.biases;
    int bad_evals = 0;

    const std::vector<double> x_fit = standardized(fit_rows, in_idx, m.input_stats);
    const std::vector<double> y_fit = standardized(fit_rows, out_idx, m.output_stats);
    std::vector<int> order(fit_rows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        double sq_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
            const size_t stop = std::min(order.size(), start + size_t(cfg.batch_size));
            grads.zero();
            for (size_t k = start; k < stop; ++k) {
                const int r = order[k];
                forward_sample(x_fit.data() + size_t(r) * di);
                const double* y = y_fit.data() + size_t(r) * d_out;
                sq_sum += kern::sumsq_diff(act[nlayers].data(), y, d_out);
                delta.resize(d_out);
                for (size_t j = 0; j < d_out; ++j)
                    delta[j] = 2.0 * (act[nlayers][j] - y[j]) / double(d_out);
                for (size_t l = nlayers; l-- > 0;) {
                    const size_t rows = size_t(m.layer_sizes[l + 1]);
                    const size_t cols = size_t(m.layer_sizes[l]);
                    kern::ger(grads.w[l].data(), rows, cols, delta.data(), act[l].data(), 1.0);
                    kern::axpy(1.0, delta.data(), grads.b[l].data(), rows);
                    if (l > 0) {
                        prev.resize(cols);
                        kern::matvec_t(m.weights[l].data(), rows, cols, delta.data(), prev.data());
                        kern::relu_mask(pre[l - 1].data(), prev.data(), cols);
                        delta.swap(prev);
                    }
                }
            }
            const double scale = -cfg.learning_rate / double(stop - start);
            for (size_t l = 0; l < nlayers; ++l) {
                kern::axpy(scale, grads.w[l].data(), m.weights[l].data(), m.weights[l].size());
                kern::axpy(scale, grads.b[l].data(), m.biases[l].data(), m.biases[l].size());
            }
        }
        const double train_loss = sq_sum / double(fit_rows.size() * d_out);
        if (!std::isfinite(train_loss))
            throw Error("train: loss became non-finite at epoch " + std::to_string(epoch + 1) +
                        "; lower the learning rate");
        report.final_train_loss = train_loss;
        report.epochs_run = epoch + 1;

        const double vl = val_loss_fn();
        report.val_curve.push_back(vl);
        if (vl < best_val) {
            best_val = vl;
            best_w = m.weights;
            best_b = m.biases;
            bad_evals = 0;
        } else if (++bad_evals >= cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }

    m.weights = std::move(best_w);
    m.biases = std::move(best_b);
    m.validate();

    Dataset val_ds;
    val_ds.columns = data.columns;
    for (int r : val_rows) val_ds.rows.push_back(data.rows[r]);
    report.accuracy = accuracy(m, val_ds);
    return {std::move(m), std::move(report)};
}

} // namespace nsx
