#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "ssc/nn/params.hpp"
#include "ssc/nn/tensor.hpp"
#include "ssc/random.hpp"

namespace ssc::nn {

enum class Padding { same, valid };
enum class Activation { relu, tanh, selu };

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

struct Var {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t id = npos;
};

/// Tape for one forward pass. Every op records its output and a closure
/// that pushes the output gradient to its inputs; backward() replays the
/// tape in reverse and accumulates into the bound Parameter gradients.
/// All ops take a leading batch dimension.
template <class T>
class Graph {
public:
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MapM = Eigen::Map<Mat>;
    using CMapM = Eigen::Map<const Mat>;
    using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
    using MapR = Eigen::Map<RowVec>;
    using CMapR = Eigen::Map<const RowVec>;
    using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
    using ArrMap = Eigen::Map<Arr>;
    using CArrMap = Eigen::Map<const Arr>;

    Var constant(Tensor<T> v) { return push(std::move(v), false, nullptr); }

    /// Binds a trainable parameter; its gradient buffer receives updates.
    Var param(Parameter<T>& p) {
        Var v = push(p.value, true, nullptr);
        nodes_[v.id].param = &p;
        return v;
    }

    const Tensor<T>& value(Var v) const { return node(v).value; }
    const Tensor<T>& grad(Var v) const { return node(v).grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // -- ops ---------------------------------------------------------------

    /// x [B,L,C], w [k,C,F], b [F] -> [B,L',F]. Same padding keeps L with a
    /// left offset of (k-1)/2; valid padding gives L-k+1.
    Var conv1d(Var x, Var w, Var b, Padding pad) {
        const auto& xs = value(x).shape();
        const auto& ws = value(w).shape();
        if (xs.size() != 3 || ws.size() != 3) throw Error("conv1d: expected [B,L,C] input and [k,C,F] kernel");
        const std::size_t B = xs[0], L = xs[1], C = xs[2], k = ws[0], F = ws[2];
        if (ws[1] != C) throw Error("conv1d: input channels " + std::to_string(C) + " != kernel channels " +
                                    std::to_string(ws[1]));
        if (value(b).size() != F) throw Error("conv1d: bias length mismatch");
        if (k == 0 || (pad == Padding::valid && k > L)) throw Error("conv1d: kernel longer than input (valid mode)");
        const std::size_t off = pad == Padding::same ? (k - 1) / 2 : 0;
        const std::size_t Lo = pad == Padding::same ? L : L - k + 1;
        const std::size_t kc = k * C;

        auto cols = std::make_shared<std::vector<T>>(B * Lo * kc, T(0));
        const T* xd = value(x).data();
        for (std::size_t bb = 0; bb < B; ++bb)
            for (std::size_t t = 0; t < Lo; ++t) {
                T* row = cols->data() + (bb * Lo + t) * kc;
                for (std::size_t i = 0; i < k; ++i) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + i) - static_cast<std::ptrdiff_t>(off);
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                    const T* in = xd + (bb * L + static_cast<std::size_t>(src)) * C;
                    std::copy(in, in + C, row + i * C);
                }
            }
        Tensor<T> out({B, Lo, F});
        MapM o(out.data(), static_cast<Eigen::Index>(B * Lo), static_cast<Eigen::Index>(F));
        CMapM cm(cols->data(), static_cast<Eigen::Index>(B * Lo), static_cast<Eigen::Index>(kc));
        CMapM wm(value(w).data(), static_cast<Eigen::Index>(kc), static_cast<Eigen::Index>(F));
        o.noalias() = cm * wm;
        o.rowwise() += CMapR(value(b).data(), static_cast<Eigen::Index>(F));

        return push(std::move(out), any_grad({x, w, b}), [=](Graph& g, std::size_t self) {
            const Eigen::Index rows = static_cast<Eigen::Index>(B * Lo);
            CMapM go(g.nodes_[self].grad.data(), rows, static_cast<Eigen::Index>(F));
            CMapM cmat(cols->data(), rows, static_cast<Eigen::Index>(kc));
            if (g.wants(w)) {
                MapM gw(g.grad_buf(w).data(), static_cast<Eigen::Index>(kc), static_cast<Eigen::Index>(F));
                gw.noalias() += cmat.transpose() * go;
            }
            if (g.wants(b)) MapR(g.grad_buf(b).data(), static_cast<Eigen::Index>(F)) += go.colwise().sum();
            if (g.wants(x)) {
                CMapM wmat(g.value(w).data(), static_cast<Eigen::Index>(kc), static_cast<Eigen::Index>(F));
                Mat dcols = go * wmat.transpose();
                T* gx = g.grad_buf(x).data();
                for (std::size_t bb = 0; bb < B; ++bb)
                    for (std::size_t t = 0; t < Lo; ++t) {
                        const T* row = dcols.data() + (bb * Lo + t) * kc;
                        for (std::size_t i = 0; i < k; ++i) {
                            const std::ptrdiff_t src =
                                static_cast<std::ptrdiff_t>(t + i) - static_cast<std::ptrdiff_t>(off);
                            if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                            T* dst = gx + (bb * L + static_cast<std::size_t>(src)) * C;
                            for (std::size_t c = 0; c < C; ++c) dst[c] += row[i * C + c];
                        }
                    }
            }
        });
    }

    /// Windowed max over the length axis: [B,L,F] -> [B,(L-p)/s+1,F].
    Var maxpool1d(Var x, std::size_t pool, std::size_t stride) {
        const auto& xs = value(x).shape();
        if (xs.size() != 3) throw Error("maxpool1d: expected [B,L,F]");
        const std::size_t B = xs[0], L = xs[1], F = xs[2];
        if (pool == 0 || stride == 0 || pool > L) throw Error("maxpool1d: window larger than input");
        const std::size_t Lo = (L - pool) / stride + 1;
        Tensor<T> out({B, Lo, F});
        auto arg = std::make_shared<std::vector<std::uint32_t>>(B * Lo * F);
        const T* xd = value(x).data();
        for (std::size_t bb = 0; bb < B; ++bb)
            for (std::size_t t = 0; t < Lo; ++t)
                for (std::size_t f = 0; f < F; ++f) {
                    std::size_t best = t * stride;
                    T bv = xd[(bb * L + best) * F + f];
                    for (std::size_t i = 1; i < pool; ++i) {
                        const std::size_t pos = t * stride + i;
                        const T v = xd[(bb * L + pos) * F + f];
                        if (v > bv) {
                            bv = v;
                            best = pos;
                        }
                    }
                    out.data()[(bb * Lo + t) * F + f] = bv;
                    (*arg)[(bb * Lo + t) * F + f] = static_cast<std::uint32_t>(best);
                }
        return push(std::move(out), wants(x), [=](Graph& g, std::size_t self) {
            if (!g.wants(x)) return;
            const T* go = g.nodes_[self].grad.data();
            T* gx = g.grad_buf(x).data();
            for (std::size_t bb = 0; bb < B; ++bb)
                for (std::size_t t = 0; t < Lo; ++t)
                    for (std::size_t f = 0; f < F; ++f) {
                        const std::size_t o = (bb * Lo + t) * F + f;
                        gx[(bb * L + (*arg)[o]) * F + f] += go[o];
                    }
        });
    }

    /// Column-wise max over the whole length: [B,L,F] -> [B,F].
    Var global_maxpool(Var x) {
        const auto& xs = value(x).shape();
        if (xs.size() != 3) throw Error("global_maxpool: expected [B,L,F]");
        if (xs[1] == 0) throw Error("global_maxpool: empty input");
        const std::size_t B = xs[0], L = xs[1], F = xs[2];
        Tensor<T> out({B, F});
        auto arg = std::make_shared<std::vector<std::uint32_t>>(B * F, 0);
        const T* xd = value(x).data();
        for (std::size_t bb = 0; bb < B; ++bb) {
            T* o = out.data() + bb * F;
            std::uint32_t* a = arg->data() + bb * F;
            std::copy(xd + bb * L * F, xd + bb * L * F + F, o);
            for (std::size_t t = 1; t < L; ++t) {
                const T* row = xd + (bb * L + t) * F;
                for (std::size_t f = 0; f < F; ++f)
                    if (row[f] > o[f]) {
                        o[f] = row[f];
                        a[f] = static_cast<std::uint32_t>(t);
                    }
            }
        }
        return push(std::move(out), wants(x), [=](Graph& g, std::size_t self) {
            if (!g.wants(x)) return;
            const T* go = g.nodes_[self].grad.data();
            T* gx = g.grad_buf(x).data();
            for (std::size_t bb = 0; bb < B; ++bb)
                for (std::size_t f = 0; f < F; ++f) gx[(bb * L + (*arg)[bb * F + f]) * F + f] += go[bb * F + f];
        });
    }

    Var activation(Var x, Activation kind) {
        Tensor<T> out(value(x).shape());
        const T* xd = value(x).data();
        T* yd = out.data();
        const std::size_t n = out.size();
        const T lam = static_cast<T>(kSeluLambda), la = static_cast<T>(kSeluLambda * kSeluAlpha);
        switch (kind) {
            case Activation::relu:
                for (std::size_t i = 0; i < n; ++i) yd[i] = xd[i] > T(0) ? xd[i] : T(0);
                break;
            case Activation::tanh:
                ArrMap(yd, static_cast<Eigen::Index>(n)) = CArrMap(xd, static_cast<Eigen::Index>(n)).tanh();
                break;
            case Activation::selu: {
                const auto xa = CArrMap(xd, static_cast<Eigen::Index>(n));
                ArrMap(yd, static_cast<Eigen::Index>(n)) = (xa > T(0)).select(lam * xa, la * (xa.min(T(0)).exp() - T(1)));
                break;
            }
        }
        return push(std::move(out), wants(x), [=](Graph& g, std::size_t self) {
            if (!g.wants(x)) return;
            const T* go = g.nodes_[self].grad.data();
            const T* y = g.nodes_[self].value.data();
            const T* xin = g.value(x).data();
            T* gx = g.grad_buf(x).data();
            for (std::size_t i = 0; i < n; ++i) {
                T d;
                switch (kind) {
                    case Activation::relu: d = xin[i] > T(0) ? T(1) : T(0); break;
                    case Activation::tanh: d = T(1) - y[i] * y[i]; break;
                    default: d = xin[i] > T(0) ? lam : y[i] + la; break;
                }
                gx[i] += go[i] * d;
            }
        });
    }

    /// x [B,N], w [N,M], b [M] -> [B,M].
    Var dense(Var x, Var w, Var b) {
        const auto& xs = value(x).shape();
        const auto& ws = value(w).shape();
        if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0] || value(b).size() != ws[1])
            throw Error("dense: shape mismatch " + shape_str(xs) + " x " + shape_str(ws));
        const auto B = static_cast<Eigen::Index>(xs[0]), N = static_cast<Eigen::Index>(xs[1]),
                   M = static_cast<Eigen::Index>(ws[1]);
        Tensor<T> out({xs[0], ws[1]});
        MapM o(out.data(), B, M);
        o.noalias() = CMapM(value(x).data(), B, N) * CMapM(value(w).data(), N, M);
        o.rowwise() += CMapR(value(b).data(), M);
        return push(std::move(out), any_grad({x, w, b}), [=](Graph& g, std::size_t self) {
            CMapM go(g.nodes_[self].grad.data(), B, M);
            if (g.wants(w))
                MapM(g.grad_buf(w).data(), N, M).noalias() += CMapM(g.value(x).data(), B, N).transpose() * go;
            if (g.wants(b)) MapR(g.grad_buf(b).data(), M) += go.colwise().sum();
            if (g.wants(x))
                MapM(g.grad_buf(x).data(), B, N).noalias() += go * CMapM(g.value(w).data(), N, M).transpose();
        });
    }

    /// Concatenates rank-2 [B,N_i] inputs along the feature axis.
    Var concat(const std::vector<Var>& parts) {
        if (parts.empty()) throw Error("concat: no inputs");
        const std::size_t B = value(parts[0]).dim(0);
        std::vector<std::size_t> widths;
        std::size_t total = 0;
        for (Var p : parts) {
            const auto& s = value(p).shape();
            if (s.size() != 2 || s[0] != B) throw Error("concat: expected [B,N] inputs with equal B");
            widths.push_back(s[1]);
            total += s[1];
        }
        Tensor<T> out({B, total});
        for (std::size_t bb = 0; bb < B; ++bb) {
            std::size_t col = 0;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                const T* src = value(parts[i]).data() + bb * widths[i];
                std::copy(src, src + widths[i], out.data() + bb * total + col);
                col += widths[i];
            }
        }
        return push(std::move(out), any_grad(parts), [=](Graph& g, std::size_t self) {
            const T* go = g.nodes_[self].grad.data();
            std::size_t col = 0;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                if (g.wants(parts[i])) {
                    T* gp = g.grad_buf(parts[i]).data();
                    for (std::size_t bb = 0; bb < B; ++bb)
                        for (std::size_t j = 0; j < widths[i]; ++j) gp[bb * widths[i] + j] += go[bb * total + col + j];
                }
                col += widths[i];
            }
        });
    }

    Var reshape(Var x, Shape shape) {
        Tensor<T> out = value(x).reshaped(std::move(shape));
        return push(std::move(out), wants(x), [=](Graph& g, std::size_t self) {
            if (!g.wants(x)) return;
            const auto& go = g.nodes_[self].grad;
            T* gx = g.grad_buf(x).data();
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        });
    }

    /// Row lookup: indices (B*L, row-major) into table [V,D] -> [B,L,D].
    Var embedding(Var table, std::span<const std::int32_t> indices, std::size_t batch, std::size_t len) {
        const auto& ts = value(table).shape();
        if (ts.size() != 2) throw Error("embedding: table must be [V,D]");
        if (indices.size() != batch * len) throw Error("embedding: index count does not match batch x length");
        const std::size_t V = ts[0], D = ts[1];
        auto idx = std::make_shared<std::vector<std::int32_t>>(indices.begin(), indices.end());
        Tensor<T> out({batch, len, D});
        const T* td = value(table).data();
        for (std::size_t i = 0; i < idx->size(); ++i) {
            const auto r = (*idx)[i];
            if (r < 0 || static_cast<std::size_t>(r) >= V) throw Error("embedding: index out of range");
            std::copy(td + static_cast<std::size_t>(r) * D, td + (static_cast<std::size_t>(r) + 1) * D,
                      out.data() + i * D);
        }
        return push(std::move(out), wants(table), [=](Graph& g, std::size_t self) {
            if (!g.wants(table)) return;
            const T* go = g.nodes_[self].grad.data();
            T* gt = g.grad_buf(table).data();
            for (std::size_t i = 0; i < idx->size(); ++i) {
                T* dst = gt + static_cast<std::size_t>((*idx)[i]) * D;
                for (std::size_t d = 0; d < D; ++d) dst[d] += go[i * D + d];
            }
        });
    }

    /// Inverted dropout; identity when rate is 0.
    Var dropout(Var x, double rate, Rng& rng) {
        if (rate <= 0.0) return x;
        if (rate >= 1.0) throw Error("dropout: rate must be < 1");
        const T keep = static_cast<T>(1.0 / (1.0 - rate));
        auto mask = std::make_shared<std::vector<T>>(value(x).size());
        for (auto& m : *mask) m = rng.bernoulli(rate) ? T(0) : keep;
        Tensor<T> out(value(x).shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(x)[i] * (*mask)[i];
        return push(std::move(out), wants(x), [=](Graph& g, std::size_t self) {
            if (!g.wants(x)) return;
            const T* go = g.nodes_[self].grad.data();
            T* gx = g.grad_buf(x).data();
            for (std::size_t i = 0; i < mask->size(); ++i) gx[i] += go[i] * (*mask)[i];
        });
    }

    /// Row-wise softmax with max subtraction.
    static Tensor<T> softmax(const Tensor<T>& logits) {
        const std::size_t B = logits.dim(0), K = logits.dim(1);
        Tensor<T> p(logits.shape());
        for (std::size_t bb = 0; bb < B; ++bb) {
            const T* z = logits.data() + bb * K;
            T* pr = p.data() + bb * K;
            T mx = *std::max_element(z, z + K);
            T sum = 0;
            for (std::size_t j = 0; j < K; ++j) sum += (pr[j] = std::exp(z[j] - mx));
            for (std::size_t j = 0; j < K; ++j) pr[j] /= sum;
        }
        return p;
    }

    /// Mean cross-entropy of softmax(logits [B,K]) against class indices;
    /// returns a [1] scalar. The probabilities are kept for inspection.
    Var softmax_xent(Var logits, std::span<const int> gold) {
        const auto& ls = value(logits).shape();
        if (ls.size() != 2 || ls[0] != gold.size()) throw Error("softmax_xent: expected [B,K] logits and B labels");
        const std::size_t B = ls[0], K = ls[1];
        auto probs = std::make_shared<Tensor<T>>(softmax(value(logits)));
        auto labels = std::make_shared<std::vector<int>>(gold.begin(), gold.end());
        T loss = 0;
        for (std::size_t bb = 0; bb < B; ++bb) {
            const int c = (*labels)[bb];
            if (c < 0 || static_cast<std::size_t>(c) >= K) throw Error("softmax_xent: label out of range");
            // log p[c] via log-sum-exp, stable for large logit gaps.
            const T* z = value(logits).data() + bb * K;
            T mx = *std::max_element(z, z + K);
            T s = 0;
            for (std::size_t j = 0; j < K; ++j) s += std::exp(z[j] - mx);
            loss += (mx + std::log(s)) - z[c];
        }
        loss /= static_cast<T>(B);
        last_probs_ = *probs;
        Tensor<T> out({1}, loss);
        return push(std::move(out), wants(logits), [=](Graph& g, std::size_t self) {
            if (!g.wants(logits)) return;
            const T scale = g.nodes_[self].grad[0] / static_cast<T>(B);
            T* gl = g.grad_buf(logits).data();
            for (std::size_t bb = 0; bb < B; ++bb)
                for (std::size_t j = 0; j < K; ++j)
                    gl[bb * K + j] +=
                        scale * ((*probs)[bb * K + j] - (static_cast<int>(j) == (*labels)[bb] ? T(1) : T(0)));
        });
    }

    /// Probabilities computed by the most recent softmax_xent.
    const Tensor<T>& last_probs() const noexcept { return last_probs_; }

    /// Reverse pass from a scalar node; adds into bound parameter gradients.
    void backward(Var loss) {
        if (nodes_.empty() || loss.id >= nodes_.size()) throw Error("backward: no forward pass recorded");
        if (backward_done_) throw Error("backward: already run for this graph");
        if (nodes_[loss.id].value.size() != 1) throw Error("backward: loss must be a scalar");
        backward_done_ = true;
        nodes_[loss.id].grad = Tensor<T>(nodes_[loss.id].value.shape(), T(1));
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.empty()) continue;
            if (n.back) n.back(*this, i);
            if (n.param) {
                auto& pg = n.param->grad;
                for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
            }
        }
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::function<void(Graph&, std::size_t)> back;
        Parameter<T>* param = nullptr;
        bool needs_grad = false;
    };

    const Node& node(Var v) const {
        if (v.id >= nodes_.size()) throw Error("graph: invalid variable");
        return nodes_[v.id];
    }

    Var push(Tensor<T> value, bool needs_grad, std::function<void(Graph&, std::size_t)> back) {
        nodes_.push_back(Node{std::move(value), {}, needs_grad ? std::move(back) : nullptr, nullptr, needs_grad});
        return Var{nodes_.size() - 1};
    }

    bool wants(Var v) const { return nodes_[v.id].needs_grad; }
    bool any_grad(std::initializer_list<Var> vs) const {
        for (Var v : vs)
            if (wants(v)) return true;
        return false;
    }
    bool any_grad(const std::vector<Var>& vs) const {
        for (Var v : vs)
            if (wants(v)) return true;
        return false;
    }

    Tensor<T>& grad_buf(Var v) {
        Node& n = nodes_[v.id];
        if (n.grad.empty() && !n.value.empty()) n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    std::vector<Node> nodes_;
    Tensor<T> last_probs_;
    bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Single-sample functional forms (no batch axis), evaluated through the graph.

template <class T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, Padding pad) {
    if (input.rank() != 2) throw Error("conv1d: expected [L,C] input");
    Graph<T> g;
    Var x = g.constant(input.reshaped({1, input.dim(0), input.dim(1)}));
    Var y = g.conv1d(x, g.constant(kernel), g.constant(bias), pad);
    const auto& v = g.value(y);
    return v.reshaped({v.dim(1), v.dim(2)});
}

template <class T>
Tensor<T> maxpool1d(const Tensor<T>& input, std::size_t pool, std::size_t stride) {
    if (input.rank() != 2) throw Error("maxpool1d: expected [L,F] input");
    Graph<T> g;
    Var y = g.maxpool1d(g.constant(input.reshaped({1, input.dim(0), input.dim(1)})), pool, stride);
    const auto& v = g.value(y);
    return v.reshaped({v.dim(1), v.dim(2)});
}

template <class T>
Tensor<T> global_maxpool(const Tensor<T>& input) {
    if (input.rank() != 2) throw Error("global_maxpool: expected [L,F] input");
    Graph<T> g;
    Var y = g.global_maxpool(g.constant(input.reshaped({1, input.dim(0), input.dim(1)})));
    return g.value(y).reshaped({input.dim(1)});
}

template <class T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
    Graph<T> g;
    return g.value(g.activation(g.constant(x), kind));
}

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    Graph<T> g;
    Var y = g.dense(g.constant(x.reshaped({1, x.size()})), g.constant(w), g.constant(b));
    return g.value(y).reshaped({w.dim(1)});
}

template <class T>
struct XentResult {
    T loss;
    std::vector<T> probs;
    std::vector<T> grad;  // d loss / d logits
};

template <class T>
XentResult<T> softmax_xent(std::span<const T> logits, int gold) {
    Graph<T> g;
    Tensor<T> z({1, logits.size()}, std::vector<T>(logits.begin(), logits.end()));
    Parameter<T> p{"logits", z, Tensor<T>(z.shape())};
    Var l = g.param(p);
    const int labels[] = {gold};
    Var loss = g.softmax_xent(l, labels);
    g.backward(loss);
    return {g.value(loss)[0], g.last_probs().values(), p.grad.values()};
}

}  // namespace ssc::nn
