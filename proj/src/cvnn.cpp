#include "nfdoa/cvnn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nfdoa/errors.hpp"
#include "nfdoa/rng.hpp"

namespace nfdoa {

using nlohmann::json;

namespace {

int same_pad_left(int in_len, int taps, int stride) {
    int out = (in_len + stride - 1) / stride;
    int total = std::max((out - 1) * stride + taps - in_len, 0);
    return total / 2;
}

void check_shape(bool ok, const char* who) {
    if (!ok) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

double uniform_sym(RandomStream& rs, double bound) { return rs.next_uniform(-bound, bound); }

} // namespace

ComplexTensor ctanh(const ComplexTensor& x) {
    ComplexTensor y = x;
    for (double& v : y.re) v = std::tanh(v);
    for (double& v : y.im) v = std::tanh(v);
    return y;
}

ComplexTensor csigmoid(const ComplexTensor& x) {
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    ComplexTensor y = x;
    for (double& v : y.re) v = sig(v);
    for (double& v : y.im) v = sig(v);
    return y;
}

ComplexTensor phase_map(const ComplexTensor& x) {
    check_shape(!x.is_real(), "phase_map");
    ComplexTensor y = ComplexTensor::zeros(x.len, x.ch, false);
    for (std::size_t i = 0; i < x.re.size(); ++i) {
        if (!(x.re[i] > 0.0))
            throw std::domain_error("phase_map: non-positive real part (wiring bug upstream)");
        y.re[i] = std::atan(x.im[i] / x.re[i]);
    }
    return y;
}

ComplexTensor split_maxpool(const ComplexTensor& x, int pool_len, int stride) {
    SplitMaxPool pool(x.len, x.ch, pool_len, stride);
    return pool.forward(x);
}

// ---------------------------------------------------------------- conv utils

namespace {

// Real cross-correlation with SAME padding shared by the complex and real
// conv layers; `w` is [out_ch][in_ch][taps].
void corr_accumulate(const std::vector<double>& x, int len, int in_ch,
                     const std::vector<double>& w, int taps, int out_ch, int stride,
                     double sign, std::vector<double>& out) {
    int pad = same_pad_left(len, taps, stride);
    int out_len = (len + stride - 1) / stride;
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* xi = x.data() + static_cast<std::size_t>(ic) * len;
            const double* wk = w.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * taps;
            double* yo = out.data() + static_cast<std::size_t>(oc) * out_len;
            for (int p = 0; p < out_len; ++p) {
                int base = p * stride - pad;
                double s = 0.0;
                for (int k = 0; k < taps; ++k) {
                    int idx = base + k;
                    if (idx >= 0 && idx < len) s += wk[k] * xi[idx];
                }
                yo[p] += sign * s;
            }
        }
    }
}

// Gradients of the correlation: scatter grad_out into grad_w and grad_x.
void corr_backward(const std::vector<double>& x, int len, int in_ch,
                   const std::vector<double>& w, int taps, int out_ch, int stride,
                   const std::vector<double>& grad_out, double sign,
                   std::vector<double>* grad_w, std::vector<double>* grad_x) {
    int pad = same_pad_left(len, taps, stride);
    int out_len = (len + stride - 1) / stride;
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* xi = x.data() + static_cast<std::size_t>(ic) * len;
            const double* wk = w.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * taps;
            const double* go = grad_out.data() + static_cast<std::size_t>(oc) * out_len;
            double* gw = grad_w ? grad_w->data() + (static_cast<std::size_t>(oc) * in_ch + ic) * taps
                                : nullptr;
            double* gx = grad_x ? grad_x->data() + static_cast<std::size_t>(ic) * len : nullptr;
            for (int p = 0; p < out_len; ++p) {
                int base = p * stride - pad;
                double g = sign * go[p];
                if (g == 0.0) continue;
                for (int k = 0; k < taps; ++k) {
                    int idx = base + k;
                    if (idx < 0 || idx >= len) continue;
                    if (gw) gw[k] += g * xi[idx];
                    if (gx) gx[idx] += g * wk[k];
                }
            }
        }
    }
}

} // namespace

// ------------------------------------------------------------- ComplexConv1d

ComplexConv1d::ComplexConv1d(int in_len, int taps, int in_ch, int out_ch, int stride)
    : in_len(in_len), taps(taps), in_ch(in_ch), out_ch(out_ch), stride(stride) {
    std::size_t nw = static_cast<std::size_t>(out_ch) * in_ch * taps;
    wr.assign(nw, 0.0);
    wi.assign(nw, 0.0);
    br.assign(out_ch, 0.0);
    bi.assign(out_ch, 0.0);
    gwr = wr; gwi = wi; gbr = br; gbi = bi;
    mwr = wr; mwi = wi; mbr = br; mbi = bi;
    vwr = wr; vwi = wi; vbr = br; vbi = bi;
}

int ComplexConv1d::out_len() const { return (in_len + stride - 1) / stride; }

ComplexTensor ComplexConv1d::forward(const ComplexTensor& x) {
    check_shape(x.len == in_len && x.ch == in_ch && !x.is_real(), "ComplexConv1d");
    cached_in_ = x;
    ComplexTensor y = ComplexTensor::zeros(out_len(), out_ch);
    // (Wr * u - Wi * v) + j (Wi * u + Wr * v)
    corr_accumulate(x.re, in_len, in_ch, wr, taps, out_ch, stride, +1.0, y.re);
    corr_accumulate(x.im, in_len, in_ch, wi, taps, out_ch, stride, -1.0, y.re);
    corr_accumulate(x.re, in_len, in_ch, wi, taps, out_ch, stride, +1.0, y.im);
    corr_accumulate(x.im, in_len, in_ch, wr, taps, out_ch, stride, +1.0, y.im);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int p = 0; p < y.len; ++p) {
            y.r(oc, p) += br[oc];
            y.i(oc, p) += bi[oc];
        }
    return y;
}

ComplexTensor ComplexConv1d::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(in_len, in_ch);
    const auto& u = cached_in_.re;
    const auto& v = cached_in_.im;
    // d/dWr = g_re * u + g_im * v ; d/dWi = -g_re * v + g_im * u
    // du = Wr^T g_re + Wi^T g_im ; dv = -Wi^T g_re + Wr^T g_im
    corr_backward(u, in_len, in_ch, wr, taps, out_ch, stride, g.re, +1.0, &gwr, &gx.re);
    corr_backward(v, in_len, in_ch, wi, taps, out_ch, stride, g.re, -1.0, &gwi, &gx.im);
    corr_backward(u, in_len, in_ch, wi, taps, out_ch, stride, g.im, +1.0, &gwi, &gx.re);
    corr_backward(v, in_len, in_ch, wr, taps, out_ch, stride, g.im, +1.0, &gwr, &gx.im);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int p = 0; p < g.len; ++p) {
            gbr[oc] += g.r(oc, p);
            gbi[oc] += g.i(oc, p);
        }
    return gx;
}

long long ComplexConv1d::flops() const {
    long long real = 2LL * in_len * (static_cast<long long>(in_ch) * taps * taps + 1) * out_ch;
    return 4 * real;
}

void ComplexConv1d::collect_params(std::vector<ParamBlock>& out) {
    out.push_back({&wr, &gwr, &mwr, &vwr});
    out.push_back({&wi, &gwi, &mwi, &vwi});
    out.push_back({&br, &gbr, &mbr, &vbr});
    out.push_back({&bi, &gbi, &mbi, &vbi});
}

// -------------------------------------------------------------- SplitMaxPool

SplitMaxPool::SplitMaxPool(int in_len, int ch, int pool_len, int stride)
    : in_len(in_len), ch(ch), pool_len(pool_len), stride(stride) {}

int SplitMaxPool::out_len() const { return (in_len + stride - 1) / stride; }

ComplexTensor SplitMaxPool::forward(const ComplexTensor& x) {
    check_shape(x.len == in_len && x.ch == ch, "SplitMaxPool");
    int ol = out_len();
    ComplexTensor y = ComplexTensor::zeros(ol, ch, !x.is_real());
    arg_re_.assign(static_cast<std::size_t>(ol) * ch, 0);
    arg_im_.assign(x.is_real() ? 0 : static_cast<std::size_t>(ol) * ch, 0);
    auto pool_plane = [&](const std::vector<double>& in, std::vector<double>& out,
                          std::vector<int>& arg) {
        for (int c = 0; c < ch; ++c) {
            for (int p = 0; p < ol; ++p) {
                int lo = p * stride;
                int hi = std::min(lo + pool_len, in_len);
                int best = lo;
                double bv = in[static_cast<std::size_t>(c) * in_len + lo];
                for (int q = lo + 1; q < hi; ++q) {
                    double v = in[static_cast<std::size_t>(c) * in_len + q];
                    if (v > bv) { bv = v; best = q; }
                }
                out[static_cast<std::size_t>(c) * ol + p] = bv;
                arg[static_cast<std::size_t>(c) * ol + p] = best;
            }
        }
    };
    pool_plane(x.re, y.re, arg_re_);
    if (!x.is_real()) pool_plane(x.im, y.im, arg_im_);
    return y;
}

ComplexTensor SplitMaxPool::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(in_len, ch, !g.is_real());
    int ol = out_len();
    for (int c = 0; c < ch; ++c)
        for (int p = 0; p < ol; ++p) {
            std::size_t o = static_cast<std::size_t>(c) * ol + p;
            gx.re[static_cast<std::size_t>(c) * in_len + arg_re_[o]] += g.re[o];
            if (!g.is_real()) gx.im[static_cast<std::size_t>(c) * in_len + arg_im_[o]] += g.im[o];
        }
    return gx;
}

// --------------------------------------------------------------- activations

ComplexTensor CtanhLayer::forward(const ComplexTensor& x) {
    cached_out_ = ctanh(x);
    return cached_out_;
}

ComplexTensor CtanhLayer::backward(const ComplexTensor& g) {
    ComplexTensor gx = g;
    for (std::size_t i = 0; i < gx.re.size(); ++i)
        gx.re[i] *= 1.0 - cached_out_.re[i] * cached_out_.re[i];
    for (std::size_t i = 0; i < gx.im.size(); ++i)
        gx.im[i] *= 1.0 - cached_out_.im[i] * cached_out_.im[i];
    return gx;
}

ComplexTensor CsigmoidLayer::forward(const ComplexTensor& x) {
    cached_out_ = csigmoid(x);
    return cached_out_;
}

ComplexTensor CsigmoidLayer::backward(const ComplexTensor& g) {
    ComplexTensor gx = g;
    for (std::size_t i = 0; i < gx.re.size(); ++i)
        gx.re[i] *= cached_out_.re[i] * (1.0 - cached_out_.re[i]);
    for (std::size_t i = 0; i < gx.im.size(); ++i)
        gx.im[i] *= cached_out_.im[i] * (1.0 - cached_out_.im[i]);
    return gx;
}

ComplexTensor PhaseMapLayer::forward(const ComplexTensor& x) {
    cached_in_ = x;
    return phase_map(x);
}

ComplexTensor PhaseMapLayer::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(cached_in_.len, cached_in_.ch);
    for (std::size_t i = 0; i < g.re.size(); ++i) {
        double u = cached_in_.re[i], v = cached_in_.im[i];
        double denom = u * u + v * v;
        gx.re[i] = g.re[i] * (-v / denom);
        gx.im[i] = g.re[i] * (u / denom);
    }
    return gx;
}

ComplexTensor TanhLayer::forward(const ComplexTensor& x) {
    check_shape(x.is_real(), "TanhLayer");
    cached_out_ = x;
    for (double& v : cached_out_.re) v = std::tanh(v);
    return cached_out_;
}

ComplexTensor TanhLayer::backward(const ComplexTensor& g) {
    ComplexTensor gx = g;
    for (std::size_t i = 0; i < gx.re.size(); ++i)
        gx.re[i] *= 1.0 - cached_out_.re[i] * cached_out_.re[i];
    return gx;
}

// ------------------------------------------------------------------- Flatten

ComplexTensor Flatten::forward(const ComplexTensor& x) {
    check_shape(x.len == in_len && x.ch == ch, "Flatten");
    was_complex_ = !x.is_real();
    ComplexTensor y = ComplexTensor::zeros(in_len * ch, 1, was_complex_);
    for (int p = 0; p < in_len; ++p)
        for (int c = 0; c < ch; ++c) {
            y.re[static_cast<std::size_t>(p) * ch + c] = x.r(c, p);
            if (was_complex_) y.im[static_cast<std::size_t>(p) * ch + c] = x.i(c, p);
        }
    return y;
}

ComplexTensor Flatten::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(in_len, ch, was_complex_);
    for (int p = 0; p < in_len; ++p)
        for (int c = 0; c < ch; ++c) {
            gx.r(c, p) = g.re[static_cast<std::size_t>(p) * ch + c];
            if (was_complex_) gx.i(c, p) = g.im[static_cast<std::size_t>(p) * ch + c];
        }
    return gx;
}

// ------------------------------------------------------------- ComplexAffine

ComplexAffine::ComplexAffine(int in_units, int out_units)
    : in_units(in_units), out_units(out_units) {
    std::size_t nw = static_cast<std::size_t>(out_units) * in_units;
    wr.assign(nw, 0.0); wi.assign(nw, 0.0);
    br.assign(out_units, 0.0); bi.assign(out_units, 0.0);
    gwr = wr; gwi = wi; gbr = br; gbi = bi;
    mwr = wr; mwi = wi; mbr = br; mbi = bi;
    vwr = wr; vwi = wi; vbr = br; vbi = bi;
}

ComplexTensor ComplexAffine::forward(const ComplexTensor& x) {
    check_shape(x.ch == 1 && x.len == in_units && !x.is_real(), "ComplexAffine");
    cached_in_ = x;
    ComplexTensor y = ComplexTensor::zeros(out_units, 1);
    for (int o = 0; o < out_units; ++o) {
        const double* rw = wr.data() + static_cast<std::size_t>(o) * in_units;
        const double* iw = wi.data() + static_cast<std::size_t>(o) * in_units;
        double sr = br[o], si = bi[o];
        for (int i = 0; i < in_units; ++i) {
            sr += rw[i] * x.re[i] - iw[i] * x.im[i];
            si += iw[i] * x.re[i] + rw[i] * x.im[i];
        }
        y.re[o] = sr;
        y.im[o] = si;
    }
    return y;
}

ComplexTensor ComplexAffine::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(in_units, 1);
    for (int o = 0; o < out_units; ++o) {
        double gr = g.re[o], gi = g.im[o];
        double* grw = gwr.data() + static_cast<std::size_t>(o) * in_units;
        double* giw = gwi.data() + static_cast<std::size_t>(o) * in_units;
        const double* rw = wr.data() + static_cast<std::size_t>(o) * in_units;
        const double* iw = wi.data() + static_cast<std::size_t>(o) * in_units;
        for (int i = 0; i < in_units; ++i) {
            grw[i] += gr * cached_in_.re[i] + gi * cached_in_.im[i];
            giw[i] += -gr * cached_in_.im[i] + gi * cached_in_.re[i];
            gx.re[i] += rw[i] * gr + iw[i] * gi;
            gx.im[i] += -iw[i] * gr + rw[i] * gi;
        }
        gbr[o] += gr;
        gbi[o] += gi;
    }
    return gx;
}

long long ComplexAffine::flops() const {
    return 4LL * (2 * in_units - 1) * out_units;
}

void ComplexAffine::collect_params(std::vector<ParamBlock>& out) {
    out.push_back({&wr, &gwr, &mwr, &vwr});
    out.push_back({&wi, &gwi, &mwi, &vwi});
    out.push_back({&br, &gbr, &mbr, &vbr});
    out.push_back({&bi, &gbi, &mbi, &vbi});
}

// ---------------------------------------------------------------- RealAffine

RealAffine::RealAffine(int in_units, int out_units, RealActivation act)
    : in_units(in_units), out_units(out_units), act(act) {
    w.assign(static_cast<std::size_t>(out_units) * in_units, 0.0);
    b.assign(out_units, 0.0);
    gw = w; gb = b; mw = w; mb = b; vw = w; vb = b;
}

ComplexTensor RealAffine::forward(const ComplexTensor& x) {
    check_shape(x.ch == 1 && x.len == in_units && x.is_real(), "RealAffine");
    cached_in_ = x.re;
    ComplexTensor y = ComplexTensor::zeros(out_units, 1, false);
    for (int o = 0; o < out_units; ++o) {
        const double* row = w.data() + static_cast<std::size_t>(o) * in_units;
        double s = b[o];
        for (int i = 0; i < in_units; ++i) s += row[i] * x.re[i];
        y.re[o] = act == RealActivation::tanh ? std::tanh(s) : s;
    }
    cached_out_ = y.re;
    return y;
}

ComplexTensor RealAffine::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(in_units, 1, false);
    for (int o = 0; o < out_units; ++o) {
        double gz = g.re[o];
        if (act == RealActivation::tanh) gz *= 1.0 - cached_out_[o] * cached_out_[o];
        double* grow = gw.data() + static_cast<std::size_t>(o) * in_units;
        const double* row = w.data() + static_cast<std::size_t>(o) * in_units;
        for (int i = 0; i < in_units; ++i) {
            grow[i] += gz * cached_in_[i];
            gx.re[i] += row[i] * gz;
        }
        gb[o] += gz;
    }
    return gx;
}

long long RealAffine::flops() const { return (2LL * in_units - 1) * out_units; }

void RealAffine::collect_params(std::vector<ParamBlock>& out) {
    out.push_back({&w, &gw, &mw, &vw});
    out.push_back({&b, &gb, &mb, &vb});
}

// ------------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(int in_len, int taps, int in_ch, int out_ch)
    : conv1(in_len, taps, in_ch, out_ch),
      conv2(in_len, taps, out_ch, out_ch),
      in_len(in_len), taps(taps), in_ch(in_ch), out_ch(out_ch) {
    if (in_ch != out_ch) proj = std::make_unique<ComplexConv1d>(in_len, 1, in_ch, out_ch);
}

ComplexTensor ResidualBlock::forward(const ComplexTensor& x) {
    ComplexTensor t = act2.forward(conv2.forward(act1.forward(conv1.forward(x))));
    ComplexTensor s = proj ? proj->forward(x) : x;
    for (std::size_t i = 0; i < t.re.size(); ++i) t.re[i] += s.re[i];
    for (std::size_t i = 0; i < t.im.size(); ++i) t.im[i] += s.im[i];
    return t;
}

ComplexTensor ResidualBlock::backward(const ComplexTensor& g) {
    ComplexTensor gx = conv1.backward(act1.backward(conv2.backward(act2.backward(g))));
    ComplexTensor gs = proj ? proj->backward(g) : g;
    for (std::size_t i = 0; i < gx.re.size(); ++i) gx.re[i] += gs.re[i];
    for (std::size_t i = 0; i < gx.im.size(); ++i) gx.im[i] += gs.im[i];
    return gx;
}

long long ResidualBlock::flops() const { return conv1.flops() + conv2.flops(); }

void ResidualBlock::collect_params(std::vector<ParamBlock>& out) {
    conv1.collect_params(out);
    conv2.collect_params(out);
    if (proj) proj->collect_params(out);
}

// ---------------------------------------------------------------- RealConv1d

RealConv1d::RealConv1d(int in_len, int taps, int in_ch, int out_ch, int stride)
    : in_len(in_len), taps(taps), in_ch(in_ch), out_ch(out_ch), stride(stride) {
    w.assign(static_cast<std::size_t>(out_ch) * in_ch * taps, 0.0);
    b.assign(out_ch, 0.0);
    gw = w; gb = b; mw = w; mb = b; vw = w; vb = b;
}

int RealConv1d::out_len() const { return (in_len + stride - 1) / stride; }

ComplexTensor RealConv1d::forward(const ComplexTensor& x) {
    check_shape(x.len == in_len && x.ch == in_ch && x.is_real(), "RealConv1d");
    cached_in_ = x;
    ComplexTensor y = ComplexTensor::zeros(out_len(), out_ch, false);
    corr_accumulate(x.re, in_len, in_ch, w, taps, out_ch, stride, +1.0, y.re);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int p = 0; p < y.len; ++p) y.r(oc, p) += b[oc];
    return y;
}

ComplexTensor RealConv1d::backward(const ComplexTensor& g) {
    ComplexTensor gx = ComplexTensor::zeros(in_len, in_ch, false);
    corr_backward(cached_in_.re, in_len, in_ch, w, taps, out_ch, stride, g.re, +1.0, &gw, &gx.re);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int p = 0; p < g.len; ++p) gb[oc] += g.r(oc, p);
    return gx;
}

long long RealConv1d::flops() const {
    return 2LL * in_len * (static_cast<long long>(in_ch) * taps * taps + 1) * out_ch;
}

void RealConv1d::collect_params(std::vector<ParamBlock>& out) {
    out.push_back({&w, &gw, &mw, &vw});
    out.push_back({&b, &gb, &mb, &vb});
}

// -------------------------------------------------------------------- losses

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::domain_error("TrainConfig: learning_rate must be > 0");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
        throw std::domain_error("TrainConfig: betas must lie in [0, 1)");
    if (batch_size < 1 || epochs < 1) throw std::domain_error("TrainConfig: counts must be >= 1");
}

double mae_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.empty() || pred.size() != target.size())
        throw std::domain_error("mae_loss: empty or mismatched batch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
    return s / pred.size();
}

double mse_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.empty() || pred.size() != target.size())
        throw std::domain_error("mse_loss: empty or mismatched batch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double e = pred[i] - target[i];
        s += e * e;
    }
    return s / pred.size();
}

double loss_value(LossKind kind, double error) {
    return kind == LossKind::mae ? std::abs(error) : error * error;
}

double loss_derivative(LossKind kind, double error) {
    if (kind == LossKind::mse) return 2.0 * error;
    return error > 0.0 ? 1.0 : (error < 0.0 ? -1.0 : 0.0); // subgradient 0 at the kink
}

// ------------------------------------------------------------- layered model

namespace {

enum class InputAdapter { complex_feature, concat_real };

class LayeredModel : public Model {
  public:
    LayeredModel(std::string name, int n_in, InputAdapter adapter)
        : name_(std::move(name)), n_in_(n_in), adapter_(adapter) {}

    double forward(const CVector& feature) override {
        if (static_cast<int>(feature.size()) != n_in_)
            throw std::invalid_argument(name_ + ": feature length " +
                                        std::to_string(feature.size()) + ", expected " +
                                        std::to_string(n_in_));
        ComplexTensor t;
        if (adapter_ == InputAdapter::complex_feature) {
            t = ComplexTensor::from_vector(feature);
        } else {
            t = ComplexTensor::zeros(2 * n_in_, 1, false);
            for (int i = 0; i < n_in_; ++i) {
                t.re[i] = feature[i].real();
                t.re[n_in_ + i] = feature[i].imag();
            }
        }
        for (auto& layer : layers_) t = layer->forward(t);
        check_shape(t.len == 1 && t.ch == 1 && t.is_real(), "LayeredModel output");
        return t.re[0];
    }

    void backward(double grad_output) override {
        ComplexTensor g = ComplexTensor::zeros(1, 1, false);
        g.re[0] = grad_output;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    }

    void zero_grad() override {
        for (ParamBlock& p : params()) std::fill(p.g->begin(), p.g->end(), 0.0);
    }

    std::vector<ParamBlock> params() override {
        std::vector<ParamBlock> out;
        for (auto& layer : layers_) layer->collect_params(out);
        return out;
    }

    long long flops() const override {
        long long total = 0;
        for (const auto& layer : layers_) total += layer->flops();
        return total;
    }

    std::string name() const override { return name_; }
    int input_size() const override { return n_in_; }

    std::string arch_json() const override;
    std::unique_ptr<Model> clone() const override;

    std::vector<std::unique_ptr<Layer>> layers_;
    std::string name_;
    int n_in_;
    InputAdapter adapter_;
};

json pair_array(const std::vector<double>& re, const std::vector<double>& im) {
    json a = json::array();
    for (std::size_t i = 0; i < re.size(); ++i) a.push_back({re[i], im[i]});
    return a;
}

void pair_fill(const json& a, std::vector<double>& re, std::vector<double>& im) {
    if (a.size() != re.size()) throw std::invalid_argument("checkpoint: parameter size mismatch");
    for (std::size_t i = 0; i < re.size(); ++i) {
        re[i] = a[i][0].get<double>();
        im[i] = a[i][1].get<double>();
    }
}

void plain_fill(const json& a, std::vector<double>& w) {
    if (a.size() != w.size()) throw std::invalid_argument("checkpoint: parameter size mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = a[i].get<double>();
}

json conv_params_json(const ComplexConv1d& c) {
    return {{"w", pair_array(c.wr, c.wi)}, {"b", pair_array(c.br, c.bi)}};
}

void conv_params_load(const json& j, ComplexConv1d& c) {
    pair_fill(j.at("w"), c.wr, c.wi);
    pair_fill(j.at("b"), c.br, c.bi);
}

json layer_spec_json(const Layer& layer) {
    json j{{"kind", layer.kind()}};
    if (auto* c = dynamic_cast<const ComplexConv1d*>(&layer)) {
        j["taps"] = c->taps; j["in_ch"] = c->in_ch; j["out_ch"] = c->out_ch; j["stride"] = c->stride;
    } else if (auto* r = dynamic_cast<const ResidualBlock*>(&layer)) {
        j["taps"] = r->taps; j["in_ch"] = r->in_ch; j["out_ch"] = r->out_ch;
    } else if (auto* p = dynamic_cast<const SplitMaxPool*>(&layer)) {
        j["pool"] = p->pool_len; j["stride"] = p->stride;
    } else if (auto* a = dynamic_cast<const ComplexAffine*>(&layer)) {
        j["in"] = a->in_units; j["out"] = a->out_units;
    } else if (auto* ra = dynamic_cast<const RealAffine*>(&layer)) {
        j["in"] = ra->in_units; j["out"] = ra->out_units;
        j["activation"] = ra->act == RealActivation::tanh ? "tanh" : "linear";
    } else if (auto* rc = dynamic_cast<const RealConv1d*>(&layer)) {
        j["taps"] = rc->taps; j["in_ch"] = rc->in_ch; j["out_ch"] = rc->out_ch; j["stride"] = rc->stride;
    }
    return j;
}

json layer_params_json(const Layer& layer) {
    if (auto* c = dynamic_cast<const ComplexConv1d*>(&layer)) return conv_params_json(*c);
    if (auto* r = dynamic_cast<const ResidualBlock*>(&layer)) {
        json j{{"conv1", conv_params_json(r->conv1)}, {"conv2", conv_params_json(r->conv2)}};
        j["proj"] = r->proj ? conv_params_json(*r->proj) : json(nullptr);
        return j;
    }
    if (auto* a = dynamic_cast<const ComplexAffine*>(&layer))
        return {{"w", pair_array(a->wr, a->wi)}, {"b", pair_array(a->br, a->bi)}};
    if (auto* ra = dynamic_cast<const RealAffine*>(&layer))
        return {{"w", ra->w}, {"b", ra->b}};
    if (auto* rc = dynamic_cast<const RealConv1d*>(&layer))
        return {{"w", rc->w}, {"b", rc->b}};
    return json(nullptr);
}

void layer_params_load(const json& j, Layer& layer) {
    if (auto* c = dynamic_cast<ComplexConv1d*>(&layer)) { conv_params_load(j, *c); return; }
    if (auto* r = dynamic_cast<ResidualBlock*>(&layer)) {
        conv_params_load(j.at("conv1"), r->conv1);
        conv_params_load(j.at("conv2"), r->conv2);
        if (r->proj && !j.at("proj").is_null()) conv_params_load(j.at("proj"), *r->proj);
        return;
    }
    if (auto* a = dynamic_cast<ComplexAffine*>(&layer)) {
        pair_fill(j.at("w"), a->wr, a->wi);
        pair_fill(j.at("b"), a->br, a->bi);
        return;
    }
    if (auto* ra = dynamic_cast<RealAffine*>(&layer)) {
        plain_fill(j.at("w"), ra->w);
        plain_fill(j.at("b"), ra->b);
        return;
    }
    if (auto* rc = dynamic_cast<RealConv1d*>(&layer)) {
        plain_fill(j.at("w"), rc->w);
        plain_fill(j.at("b"), rc->b);
        return;
    }
}

std::string LayeredModel::arch_json() const {
    json arch = json::array();
    for (const auto& layer : layers_) arch.push_back(layer_spec_json(*layer));
    return arch.dump();
}

// Rebuild a layer stack from its spec list, tracking the running shape.
std::unique_ptr<LayeredModel> model_from_arch(const std::string& name, int n_in, const json& arch) {
    InputAdapter adapter =
        name == "tdnn" ? InputAdapter::concat_real : InputAdapter::complex_feature;
    auto model = std::make_unique<LayeredModel>(name, n_in, adapter);
    int len = adapter == InputAdapter::concat_real ? 2 * n_in : n_in;
    int ch = 1;
    for (const json& spec : arch) {
        std::string kind = spec.at("kind").get<std::string>();
        if (kind == "residual_block") {
            auto l = std::make_unique<ResidualBlock>(len, spec.at("taps").get<int>(),
                                                     spec.at("in_ch").get<int>(),
                                                     spec.at("out_ch").get<int>());
            ch = l->out_ch;
            model->layers_.push_back(std::move(l));
        } else if (kind == "complex_conv1d") {
            auto l = std::make_unique<ComplexConv1d>(len, spec.at("taps").get<int>(),
                                                     spec.at("in_ch").get<int>(),
                                                     spec.at("out_ch").get<int>(),
                                                     spec.at("stride").get<int>());
            len = l->out_len();
            ch = l->out_ch;
            model->layers_.push_back(std::move(l));
        } else if (kind == "real_conv1d") {
            auto l = std::make_unique<RealConv1d>(len, spec.at("taps").get<int>(),
                                                  spec.at("in_ch").get<int>(),
                                                  spec.at("out_ch").get<int>(),
                                                  spec.at("stride").get<int>());
            len = l->out_len();
            ch = l->out_ch;
            model->layers_.push_back(std::move(l));
        } else if (kind == "split_maxpool") {
            auto l = std::make_unique<SplitMaxPool>(len, ch, spec.at("pool").get<int>(),
                                                    spec.at("stride").get<int>());
            len = l->out_len();
            model->layers_.push_back(std::move(l));
        } else if (kind == "flatten") {
            model->layers_.push_back(std::make_unique<Flatten>(len, ch));
            len *= ch;
            ch = 1;
        } else if (kind == "complex_affine") {
            auto l = std::make_unique<ComplexAffine>(spec.at("in").get<int>(), spec.at("out").get<int>());
            len = l->out_units;
            model->layers_.push_back(std::move(l));
        } else if (kind == "real_affine") {
            auto l = std::make_unique<RealAffine>(
                spec.at("in").get<int>(), spec.at("out").get<int>(),
                spec.at("activation").get<std::string>() == "tanh" ? RealActivation::tanh
                                                                   : RealActivation::linear);
            len = l->out_units;
            model->layers_.push_back(std::move(l));
        } else if (kind == "csigmoid") {
            model->layers_.push_back(std::make_unique<CsigmoidLayer>());
        } else if (kind == "ctanh") {
            model->layers_.push_back(std::make_unique<CtanhLayer>());
        } else if (kind == "phase_map") {
            model->layers_.push_back(std::make_unique<PhaseMapLayer>());
        } else if (kind == "tanh") {
            model->layers_.push_back(std::make_unique<TanhLayer>());
        } else {
            throw std::invalid_argument("unknown layer kind: " + kind);
        }
    }
    return model;
}

void glorot_init(LayeredModel& model, std::uint64_t seed) {
    RandomStream rs(RandomStream::derive(seed, 0x696e6974ULL));
    auto init_conv = [&rs](ComplexConv1d& c) {
        double bound = std::sqrt(3.0 / (2.0 * (c.in_ch * c.taps + c.out_ch * c.taps)));
        for (double& x : c.wr) x = uniform_sym(rs, bound);
        for (double& x : c.wi) x = uniform_sym(rs, bound);
    };
    for (auto& layer : model.layers_) {
        if (auto* c = dynamic_cast<ComplexConv1d*>(layer.get())) {
            init_conv(*c);
        } else if (auto* r = dynamic_cast<ResidualBlock*>(layer.get())) {
            init_conv(r->conv1);
            init_conv(r->conv2);
            if (r->proj) init_conv(*r->proj);
        } else if (auto* a = dynamic_cast<ComplexAffine*>(layer.get())) {
            double bound = std::sqrt(3.0 / (2.0 * (a->in_units + a->out_units)));
            for (double& x : a->wr) x = uniform_sym(rs, bound);
            for (double& x : a->wi) x = uniform_sym(rs, bound);
        } else if (auto* ra = dynamic_cast<RealAffine*>(layer.get())) {
            double bound = std::sqrt(6.0 / (ra->in_units + ra->out_units));
            for (double& x : ra->w) x = uniform_sym(rs, bound);
        } else if (auto* rc = dynamic_cast<RealConv1d*>(layer.get())) {
            double bound = std::sqrt(6.0 / (rc->in_ch * rc->taps + rc->out_ch * rc->taps));
            for (double& x : rc->w) x = uniform_sym(rs, bound);
        }
    }
}

std::unique_ptr<Model> finish_clone(const LayeredModel& src) {
    json arch = json::parse(src.arch_json());
    auto copy = model_from_arch(src.name_, src.n_in_, arch);
    auto* mutable_src = const_cast<LayeredModel*>(&src);
    auto src_params = mutable_src->params();
    auto dst_params = copy->params();
    for (std::size_t i = 0; i < src_params.size(); ++i) {
        *dst_params[i].w = *src_params[i].w;
        *dst_params[i].m = *src_params[i].m;
        *dst_params[i].v = *src_params[i].v;
    }
    return copy;
}

std::unique_ptr<Model> LayeredModel::clone() const { return finish_clone(*this); }

} // namespace

std::unique_ptr<Model> build_cvnn(int n_in, std::uint64_t seed) {
    if (n_in < 5) throw std::domain_error("build_cvnn: n_in too small");
    auto model = std::make_unique<LayeredModel>("cvnn", n_in, InputAdapter::complex_feature);
    int len = n_in;
    model->layers_.push_back(std::make_unique<ResidualBlock>(len, 3, 1, 8));
    {
        auto pool = std::make_unique<SplitMaxPool>(len, 8, 2, 2);
        len = pool->out_len();
        model->layers_.push_back(std::move(pool));
    }
    model->layers_.push_back(std::make_unique<ResidualBlock>(len, 3, 8, 4));
    {
        auto pool = std::make_unique<SplitMaxPool>(len, 4, 2, 2);
        len = pool->out_len();
        model->layers_.push_back(std::move(pool));
    }
    model->layers_.push_back(std::make_unique<Flatten>(len, 4));
    int n_flat = len * 4;
    model->layers_.push_back(std::make_unique<ComplexAffine>(n_flat, 20));
    model->layers_.push_back(std::make_unique<CsigmoidLayer>());
    model->layers_.push_back(std::make_unique<PhaseMapLayer>());
    model->layers_.push_back(std::make_unique<RealAffine>(20, 10, RealActivation::tanh));
    model->layers_.push_back(std::make_unique<RealAffine>(10, 10, RealActivation::tanh));
    model->layers_.push_back(std::make_unique<RealAffine>(10, 1, RealActivation::linear));
    glorot_init(*model, seed);
    return model;
}

std::unique_ptr<Model> build_tdnn(const TdnnSpec& spec, std::uint64_t seed) {
    auto model = std::make_unique<LayeredModel>("tdnn", spec.n_in, InputAdapter::concat_real);
    int len = 2 * spec.n_in;
    int ch = 1;
    for (int f : spec.filters) {
        model->layers_.push_back(std::make_unique<RealConv1d>(len, spec.context, ch, f));
        model->layers_.push_back(std::make_unique<TanhLayer>());
        ch = f;
    }
    model->layers_.push_back(std::make_unique<Flatten>(len, ch));
    int width = len * ch;
    for (int dw : spec.dense) {
        model->layers_.push_back(std::make_unique<RealAffine>(width, dw, RealActivation::tanh));
        width = dw;
    }
    model->layers_.push_back(std::make_unique<RealAffine>(width, 1, RealActivation::linear));
    glorot_init(*model, seed);
    return model;
}

std::unique_ptr<Model> build_tdnn(int n_in, std::uint64_t seed) {
    TdnnSpec spec;
    spec.n_in = n_in;
    return build_tdnn(spec, seed);
}

long long flops_count(const Model& model) { return model.flops(); }

long long tdnn_flops(const TdnnSpec& spec) { return build_tdnn(spec, 0)->flops(); }

void optimizer_step(Model& model, OptimizerState& state, const TrainConfig& config) {
    ++state.step;
    if (config.optimizer == OptimizerKind::sgd) {
        for (ParamBlock& p : model.params())
            for (std::size_t i = 0; i < p.w->size(); ++i)
                (*p.w)[i] -= config.learning_rate * (*p.g)[i];
        return;
    }
    double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    for (ParamBlock& p : model.params()) {
        for (std::size_t i = 0; i < p.w->size(); ++i) {
            double g = (*p.g)[i];
            double m = (*p.m)[i] = config.adam_beta1 * (*p.m)[i] + (1.0 - config.adam_beta1) * g;
            double v = (*p.v)[i] = config.adam_beta2 * (*p.v)[i] + (1.0 - config.adam_beta2) * g * g;
            (*p.w)[i] -= config.learning_rate * (m / c1) / (std::sqrt(v / c2) + config.adam_eps);
        }
    }
}

GradCheckReport gradient_check(Model& model, const CVector& feature, double target,
                               LossKind loss, double tolerance, double fd_step) {
    model.zero_grad();
    double pred = model.forward(feature);
    model.backward(loss_derivative(loss, pred - target));

    auto blocks = model.params();
    std::vector<std::vector<double>> analytic;
    for (ParamBlock& p : blocks) analytic.push_back(*p.g);

    double max_abs_grad = 0.0;
    double max_abs_diff = 0.0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        std::vector<double>& w = *blocks[bi].w;
        for (std::size_t i = 0; i < w.size(); ++i) {
            double keep = w[i];
            w[i] = keep + fd_step;
            double lp = loss_value(loss, model.forward(feature) - target);
            w[i] = keep - fd_step;
            double lm = loss_value(loss, model.forward(feature) - target);
            w[i] = keep;
            double fd = (lp - lm) / (2.0 * fd_step);
            double a = analytic[bi][i];
            max_abs_grad = std::max({max_abs_grad, std::abs(a), std::abs(fd)});
            max_abs_diff = std::max(max_abs_diff, std::abs(a - fd));
        }
    }
    GradCheckReport report;
    report.max_rel_error = max_abs_diff / std::max(max_abs_grad, 1e-12);
    report.pass = report.max_rel_error < tolerance;
    return report;
}

// ------------------------------------------------------------- serialization

namespace {

json train_config_json(const TrainConfig& c) {
    return {{"optimizer", c.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
            {"learning_rate", c.learning_rate},
            {"lr_schedule", c.lr_schedule == LrSchedule::cosine ? "cosine" : "constant"},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"loss", c.loss == LossKind::mae ? "mae" : "mse"},
            {"seed", c.seed}};
}

} // namespace

std::string model_to_json(const Model& model, const TrainConfig& config, std::uint64_t seed,
                          const std::string& metrics_json) {
    const auto* lm = dynamic_cast<const LayeredModel*>(&model);
    if (!lm) throw std::invalid_argument("model_to_json: unsupported model type");
    json params = json::array();
    for (const auto& layer : lm->layers_) params.push_back(layer_params_json(*layer));
    json j{{"model", lm->name()},
           {"n_in", lm->input_size()},
           {"architecture", json::parse(lm->arch_json())},
           {"params", params},
           {"train_config", train_config_json(config)},
           {"seed", seed},
           {"metrics", metrics_json.empty() ? json(nullptr) : json::parse(metrics_json)}};
    return j.dump(2);
}

std::unique_ptr<Model> model_from_json(const std::string& text) {
    json j = json::parse(text);
    auto model = model_from_arch(j.at("model").get<std::string>(), j.at("n_in").get<int>(),
                                 j.at("architecture"));
    const json& params = j.at("params");
    if (params.size() != model->layers_.size())
        throw std::invalid_argument("checkpoint: layer count mismatch");
    for (std::size_t i = 0; i < model->layers_.size(); ++i)
        if (!params[i].is_null()) layer_params_load(params[i], *model->layers_[i]);
    return model;
}

void save_checkpoint(const Model& model, const TrainConfig& config, std::uint64_t seed,
                     const std::string& metrics_json, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    f << model_to_json(model, config, seed, metrics_json) << "\n";
    if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return model_from_json(ss.str());
}

} // namespace nfdoa
