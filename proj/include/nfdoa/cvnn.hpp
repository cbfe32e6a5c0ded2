#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nfdoa/cmatrix.hpp"

namespace nfdoa {

// Split-storage tensor: re/im planes indexed [channel][position]. Real-valued
// stages of the network leave `im` empty.
struct ComplexTensor {
    std::vector<double> re, im;
    int len = 0;
    int ch = 1;

    static ComplexTensor zeros(int len, int ch, bool complex_valued = true) {
        ComplexTensor t;
        t.len = len;
        t.ch = ch;
        t.re.assign(static_cast<std::size_t>(len) * ch, 0.0);
        if (complex_valued) t.im.assign(static_cast<std::size_t>(len) * ch, 0.0);
        return t;
    }

    static ComplexTensor from_vector(const CVector& v) {
        ComplexTensor t = zeros(static_cast<int>(v.size()), 1);
        for (std::size_t i = 0; i < v.size(); ++i) {
            t.re[i] = v[i].real();
            t.im[i] = v[i].imag();
        }
        return t;
    }

    bool is_real() const { return im.empty(); }
    std::size_t size() const { return re.size(); }
    double& r(int c, int p) { return re[static_cast<std::size_t>(c) * len + p]; }
    double& i(int c, int p) { return im[static_cast<std::size_t>(c) * len + p]; }
    double r(int c, int p) const { return re[static_cast<std::size_t>(c) * len + p]; }
    double i(int c, int p) const { return im[static_cast<std::size_t>(c) * len + p]; }
};

// Elementwise split activations and the complex-to-phase mapping.
ComplexTensor ctanh(const ComplexTensor& x);
ComplexTensor csigmoid(const ComplexTensor& x);
ComplexTensor phase_map(const ComplexTensor& x); // arctan(im/re), requires re > 0

// Independent max-pooling of the re/im planes; ceil-mode windows.
ComplexTensor split_maxpool(const ComplexTensor& x, int pool_len, int stride);

// One mutable parameter array with its gradient and optimizer moments.
struct ParamBlock {
    std::vector<double>* w;
    std::vector<double>* g;
    std::vector<double>* m;
    std::vector<double>* v;
};

class Layer {
  public:
    virtual ~Layer() = default;
    virtual ComplexTensor forward(const ComplexTensor& x) = 0;
    virtual ComplexTensor backward(const ComplexTensor& grad_out) = 0;
    virtual std::string kind() const = 0;
    virtual long long flops() const { return 0; }
    virtual void collect_params(std::vector<ParamBlock>&) {}
};

class ComplexConv1d : public Layer {
  public:
    // kernel (l_c, f_i, f_c, s_c), SAME padding; weights [f_c][f_i][l_c]
    ComplexConv1d(int in_len, int taps, int in_ch, int out_ch, int stride = 1);
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "complex_conv1d"; }
    long long flops() const override;
    void collect_params(std::vector<ParamBlock>& out) override;

    int out_len() const;
    int in_len, taps, in_ch, out_ch, stride;
    std::vector<double> wr, wi, br, bi;
    std::vector<double> gwr, gwi, gbr, gbi;
    std::vector<double> mwr, mwi, mbr, mbi, vwr, vwi, vbr, vbi;

  private:
    ComplexTensor cached_in_;
};

class SplitMaxPool : public Layer {
  public:
    SplitMaxPool(int in_len, int ch, int pool_len = 2, int stride = 2);
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "split_maxpool"; }

    int out_len() const;
    int in_len, ch, pool_len, stride;

  private:
    std::vector<int> arg_re_, arg_im_;
};

class CtanhLayer : public Layer {
  public:
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "ctanh"; }

  private:
    ComplexTensor cached_out_;
};

class CsigmoidLayer : public Layer {
  public:
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "csigmoid"; }

  private:
    ComplexTensor cached_out_;
};

class PhaseMapLayer : public Layer {
  public:
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "phase_map"; }

  private:
    ComplexTensor cached_in_;
};

// (len, ch) -> (len*ch, 1), position-major with channel fastest.
class Flatten : public Layer {
  public:
    Flatten(int in_len, int ch) : in_len(in_len), ch(ch) {}
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "flatten"; }
    int in_len, ch;

  private:
    bool was_complex_ = true;
};

class ComplexAffine : public Layer {
  public:
    ComplexAffine(int in_units, int out_units);
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "complex_affine"; }
    long long flops() const override;
    void collect_params(std::vector<ParamBlock>& out) override;

    int in_units, out_units;
    std::vector<double> wr, wi, br, bi; // weights [out][in]
    std::vector<double> gwr, gwi, gbr, gbi;
    std::vector<double> mwr, mwi, mbr, mbi, vwr, vwi, vbr, vbi;

  private:
    ComplexTensor cached_in_;
};

enum class RealActivation { tanh, linear };

class RealAffine : public Layer {
  public:
    RealAffine(int in_units, int out_units, RealActivation act);
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "real_affine"; }
    long long flops() const override;
    void collect_params(std::vector<ParamBlock>& out) override;

    int in_units, out_units;
    RealActivation act;
    std::vector<double> w, b, gw, gb, mw, mb, vw, vb;

  private:
    std::vector<double> cached_in_, cached_out_;
};

// conv(C_in -> C_out) + Ctanh + conv(C_out -> C_out) + Ctanh, plus a shortcut
// that is the identity when channel counts match and a 1x1 complex conv
// projection otherwise.
class ResidualBlock : public Layer {
  public:
    ResidualBlock(int in_len, int taps, int in_ch, int out_ch);
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "residual_block"; }
    long long flops() const override; // main path only; the shortcut is not counted
    void collect_params(std::vector<ParamBlock>& out) override;

    ComplexConv1d conv1, conv2;
    std::unique_ptr<ComplexConv1d> proj; // null when in_ch == out_ch
    CtanhLayer act1, act2;
    int in_len, taps, in_ch, out_ch;
};

class TanhLayer : public Layer { // real tanh for the TDNN hidden stack
  public:
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "tanh"; }

  private:
    ComplexTensor cached_out_;
};

class RealConv1d : public Layer {
  public:
    RealConv1d(int in_len, int taps, int in_ch, int out_ch, int stride = 1);
    ComplexTensor forward(const ComplexTensor& x) override;
    ComplexTensor backward(const ComplexTensor& grad_out) override;
    std::string kind() const override { return "real_conv1d"; }
    long long flops() const override;
    void collect_params(std::vector<ParamBlock>& out) override;

    int out_len() const;
    int in_len, taps, in_ch, out_ch, stride;
    std::vector<double> w, b, gw, gb, mw, mb, vw, vb;

  private:
    ComplexTensor cached_in_;
};

enum class LossKind { mae, mse };
enum class OptimizerKind { sgd, adam };
enum class LrSchedule { constant, cosine };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    // cosine anneal keeps the MAE subgradients from jittering near the optimum
    LrSchedule lr_schedule = LrSchedule::cosine;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 64;
    int epochs = 200;
    LossKind loss = LossKind::mae;
    std::uint64_t seed = 1;

    void validate() const;
};

double mae_loss(const std::vector<double>& pred, const std::vector<double>& target);
double mse_loss(const std::vector<double>& pred, const std::vector<double>& target);
double loss_value(LossKind kind, double error);      // per-sample contribution
double loss_derivative(LossKind kind, double error); // d/d(pred) of the above

// A trainable regressor theta_hat = f(subspace feature vector).
class Model {
  public:
    virtual ~Model() = default;
    virtual double forward(const CVector& feature) = 0; // caches for backward
    virtual void backward(double grad_output) = 0;
    virtual void zero_grad() = 0;
    virtual std::vector<ParamBlock> params() = 0;
    virtual long long flops() const = 0;
    virtual std::string name() const = 0;
    virtual int input_size() const = 0; // complex entries expected per feature
    virtual std::string arch_json() const = 0;
    virtual std::unique_ptr<Model> clone() const = 0;

    double predict(const CVector& feature) { return forward(feature); }
};

// Residual CVNN of the fixed published layout for an n_in-entry feature.
std::unique_ptr<Model> build_cvnn(int n_in, std::uint64_t seed);

struct TdnnSpec {
    int n_in = 33; // complex feature entries; the real input is 2*n_in wide
    int context = 5;
    std::vector<int> filters = {8, 8, 4, 2, 1};
    std::vector<int> dense = {10, 10};
};

std::unique_ptr<Model> build_tdnn(int n_in, std::uint64_t seed);
std::unique_ptr<Model> build_tdnn(const TdnnSpec& spec, std::uint64_t seed);

long long flops_count(const Model& model);
long long tdnn_flops(const TdnnSpec& spec);

struct OptimizerState {
    long long step = 0;
};

void optimizer_step(Model& model, OptimizerState& state, const TrainConfig& config);

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
};

// Central finite differences against the analytic gradients; the error is
// measured relative to the largest gradient magnitude in the model.
GradCheckReport gradient_check(Model& model, const CVector& feature, double target,
                               LossKind loss, double tolerance, double fd_step = 1e-6);

// Checkpoint JSON: architecture, params as [re, im] pairs (plain arrays for
// real layers), train_config, seed, metrics. Round-trips bit-exactly.
void save_checkpoint(const Model& model, const TrainConfig& config, std::uint64_t seed,
                     const std::string& metrics_json, const std::string& path);
std::unique_ptr<Model> load_checkpoint(const std::string& path);
std::string model_to_json(const Model& model, const TrainConfig& config, std::uint64_t seed,
                          const std::string& metrics_json);
std::unique_ptr<Model> model_from_json(const std::string& text);

} // namespace nfdoa
