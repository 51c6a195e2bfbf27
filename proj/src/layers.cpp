#include "ecg/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "ecg/errors.hpp"

namespace ecg::nn {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

void uniform_init(Tensor& t, double bound, Rng& rng) {
  for (double& v : t.values()) {
    v = rng.uniform(-bound, bound);
  }
}

}  // namespace

void sigmoid_inplace(double* data, std::size_t n) {
  Eigen::Map<Eigen::ArrayXd> a(data, static_cast<Eigen::Index>(n));
  a = 1.0 / (1.0 + (-a).exp());
}

void tanh_inplace(double* data, std::size_t n) {
  Eigen::Map<Eigen::ArrayXd> a(data, static_cast<Eigen::Index>(n));
  a = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

Tensor sigmoid_backward_from_output(const Tensor& p, const Tensor& grad_p) {
  check_same_shape(p, grad_p, "sigmoid backward");
  Tensor out(p.shape());
  const double* pp = p.data();
  const double* gg = grad_p.data();
  double* oo = out.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    oo[i] = gg[i] * pp[i] * (1.0 - pp[i]);
  }
  return out;
}

Tensor activation(Activation kind, const Tensor& x) {
  Tensor y = x;
  switch (kind) {
    case Activation::Sigmoid:
      sigmoid_inplace(y.data(), y.size());
      return y;
    case Activation::Tanh:
      tanh_inplace(y.data(), y.size());
      return y;
    case Activation::Relu:
      for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
      return y;
    case Activation::SoftmaxRows: {
      if (x.rank() != 2) {
        throw ShapeError("softmax_rows: expected rank-2 input, got " +
                         x.shape_str());
      }
      const std::size_t rows = x.dim(0), cols = x.dim(1);
      for (std::size_t r = 0; r < rows; ++r) {
        double* row = y.data() + r * cols;
        const double m = *std::max_element(row, row + cols);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          row[c] = std::exp(row[c] - m);
          sum += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
      }
      return y;
    }
  }
  throw std::invalid_argument("activation: unknown kind");
}

// ---------------------------------------------------------------- Dense --

Dense::Dense(std::string name, std::size_t in, std::size_t out)
    : weight(name + ".weight", {in, out}),
      bias(name + ".bias", {out}),
      in_(in),
      out_(out) {}

void Dense::init(Rng& rng) {
  uniform_init(weight.value, 1.0 / std::sqrt(static_cast<double>(in_)), rng);
  bias.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ShapeError("dense " + weight.name + ": input " + x.shape_str() +
                     " incompatible with weight " + weight.value.shape_str());
  }
  x_cache_ = x;
  Tensor y({x.dim(0), out_});
  gemm(x, false, weight.value, false, y);
  MatMap my(y.data(), static_cast<Eigen::Index>(y.dim(0)),
            static_cast<Eigen::Index>(out_));
  my.rowwise() += ConstVecMap(bias.value.data(),
                              static_cast<Eigen::Index>(out_));
  return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
  const std::size_t batch = x_cache_.dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch ||
      grad_out.dim(1) != out_) {
    throw ShapeError("dense " + weight.name + ": upstream gradient " +
                     grad_out.shape_str() + " does not match output [" +
                     std::to_string(batch) + "," + std::to_string(out_) + "]");
  }
  if (accumulate_grads) {
    gemm(x_cache_, true, grad_out, false, weight.grad, 1.0);
    ConstMatMap mg(grad_out.data(), static_cast<Eigen::Index>(batch),
                   static_cast<Eigen::Index>(out_));
    VecMap(bias.grad.data(), static_cast<Eigen::Index>(out_)) +=
        mg.colwise().sum();
  }
  Tensor grad_in({batch, in_});
  gemm(grad_out, false, weight.value, true, grad_in);
  return grad_in;
}

// ----------------------------------------------------------------- Relu --

Tensor Relu::forward(const Tensor& x) {
  Tensor y = x;
  mask_.resize(x.size());
  double* d = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = d[i] > 0.0;
    if (!mask_[i]) d[i] = 0.0;
  }
  return y;
}

Tensor Relu::backward(const Tensor& grad_out) const {
  if (grad_out.size() != mask_.size()) {
    throw ShapeError("relu: upstream gradient size " +
                     std::to_string(grad_out.size()) +
                     " does not match cached input size " +
                     std::to_string(mask_.size()));
  }
  Tensor g = grad_out;
  double* d = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask_[i]) d[i] = 0.0;
  }
  return g;
}

// ----------------------------------------------------------------- Lstm --

Lstm::Lstm(std::string name, std::size_t input_size, std::size_t hidden_size)
    : weight(name + ".weight", {input_size + hidden_size, 4 * hidden_size}),
      bias(name + ".bias", {4 * hidden_size}),
      in_(input_size),
      hidden_(hidden_size) {}

void Lstm::init(Rng& rng) {
  uniform_init(weight.value,
               1.0 / std::sqrt(static_cast<double>(in_ + hidden_)), rng);
  bias.value.fill(0.0);
}

void Lstm::step(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                Tensor& h_out, Tensor& c_out) const {
  if (x_t.rank() != 2 || x_t.dim(1) != in_) {
    throw ShapeError("lstm " + weight.name + ": step input " + x_t.shape_str() +
                     " incompatible with input size " + std::to_string(in_));
  }
  const std::size_t batch = x_t.dim(0);
  if (h_prev.shape() != std::vector<std::size_t>{batch, hidden_} ||
      c_prev.shape() != h_prev.shape()) {
    throw ShapeError("lstm " + weight.name + ": state shapes " +
                     h_prev.shape_str() + "/" + c_prev.shape_str() +
                     " do not match [batch,H]");
  }
  const std::size_t xw = in_ + hidden_, gw = 4 * hidden_;
  Tensor xh({batch, xw});
  for (std::size_t b = 0; b < batch; ++b) {
    std::memcpy(xh.data() + b * xw, x_t.data() + b * in_,
                in_ * sizeof(double));
    std::memcpy(xh.data() + b * xw + in_, h_prev.data() + b * hidden_,
                hidden_ * sizeof(double));
  }
  Tensor gates({batch, gw});
  gemm(xh, false, weight.value, false, gates);
  MatMap(gates.data(), static_cast<Eigen::Index>(batch),
         static_cast<Eigen::Index>(gw))
      .rowwise() += ConstVecMap(bias.value.data(),
                                static_cast<Eigen::Index>(gw));
  h_out = Tensor({batch, hidden_});
  c_out = Tensor({batch, hidden_});
  for (std::size_t b = 0; b < batch; ++b) {
    double* g = gates.data() + b * gw;
    sigmoid_inplace(g, 3 * hidden_);        // i, f, o
    tanh_inplace(g + 3 * hidden_, hidden_);  // g
    const double* cp = c_prev.data() + b * hidden_;
    double* h = h_out.data() + b * hidden_;
    double* c = c_out.data() + b * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) {
      const double i_g = g[j], f_g = g[hidden_ + j], o_g = g[2 * hidden_ + j],
                   g_g = g[3 * hidden_ + j];
      c[j] = f_g * cp[j] + i_g * g_g;
      h[j] = o_g * std::tanh(c[j]);
    }
  }
}

Tensor Lstm::forward(const Tensor& x, bool return_all_steps) {
  if (x.rank() != 3 || x.dim(2) != in_) {
    throw ShapeError("lstm " + weight.name + ": expected input [batch,T," +
                     std::to_string(in_) + "], got " + x.shape_str());
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1);
  if (steps == 0) {
    throw ShapeError("lstm " + weight.name + ": sequence length must be >= 1");
  }
  batch_ = batch;
  steps_ = steps;
  cached_all_ = return_all_steps;

  const std::size_t xw = in_ + hidden_, gw = 4 * hidden_, hw = hidden_;
  xh_.resize(steps * batch * xw);
  gates_.resize(steps * batch * gw);
  cells_.resize(steps * batch * hw);
  tanh_c_.resize(steps * batch * hw);
  hidden_states_.resize(steps * batch * hw);

  ConstMatMap w_map(weight.value.data(), static_cast<Eigen::Index>(xw),
                    static_cast<Eigen::Index>(gw));
  ConstVecMap b_map(bias.value.data(), static_cast<Eigen::Index>(gw));

  for (std::size_t t = 0; t < steps; ++t) {
    double* xh_t = xh_.data() + t * batch * xw;
    const double* h_prev =
        t > 0 ? hidden_states_.data() + (t - 1) * batch * hw : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      std::memcpy(xh_t + b * xw, x.data() + (b * steps + t) * in_,
                  in_ * sizeof(double));
      if (h_prev) {
        std::memcpy(xh_t + b * xw + in_, h_prev + b * hw,
                    hw * sizeof(double));
      } else {
        std::memset(xh_t + b * xw + in_, 0, hw * sizeof(double));
      }
    }

    double* gates_t = gates_.data() + t * batch * gw;
    MatMap g_map(gates_t, static_cast<Eigen::Index>(batch),
                 static_cast<Eigen::Index>(gw));
    g_map.noalias() = ConstMatMap(xh_t, static_cast<Eigen::Index>(batch),
                                  static_cast<Eigen::Index>(xw)) *
                      w_map;
    g_map.rowwise() += b_map;

    double* c_t = cells_.data() + t * batch * hw;
    double* tc_t = tanh_c_.data() + t * batch * hw;
    double* h_t = hidden_states_.data() + t * batch * hw;
    const double* c_prev = t > 0 ? cells_.data() + (t - 1) * batch * hw : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      double* g = gates_t + b * gw;
      sigmoid_inplace(g, 3 * hidden_);
      tanh_inplace(g + 3 * hidden_, hidden_);
      const double* cp = c_prev ? c_prev + b * hw : nullptr;
      for (std::size_t j = 0; j < hw; ++j) {
        const double prev = cp ? cp[j] : 0.0;
        c_t[b * hw + j] = g[hidden_ + j] * prev + g[j] * g[3 * hidden_ + j];
      }
    }
    std::memcpy(tc_t, c_t, batch * hw * sizeof(double));
    tanh_inplace(tc_t, batch * hw);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* g = gates_t + b * gw;
      for (std::size_t j = 0; j < hw; ++j) {
        h_t[b * hw + j] = g[2 * hidden_ + j] * tc_t[b * hw + j];
      }
    }
  }

  if (return_all_steps) {
    // reorder [T][B,H] -> [B,T,H]
    Tensor out({batch, steps, hidden_});
    for (std::size_t t = 0; t < steps; ++t) {
      const double* h_t = hidden_states_.data() + t * batch * hw;
      for (std::size_t b = 0; b < batch; ++b) {
        std::memcpy(out.data() + (b * steps + t) * hw, h_t + b * hw,
                    hw * sizeof(double));
      }
    }
    return out;
  }
  Tensor out({batch, hidden_});
  std::memcpy(out.data(), hidden_states_.data() + (steps - 1) * batch * hw,
              batch * hw * sizeof(double));
  return out;
}

Tensor Lstm::backward(const Tensor& grad_out) {
  const std::size_t batch = batch_, steps = steps_;
  const std::size_t xw = in_ + hidden_, gw = 4 * hidden_, hw = hidden_;
  if (batch == 0) {
    throw ShapeError("lstm " + weight.name + ": backward before forward");
  }
  const std::vector<std::size_t> want_all{batch, steps, hidden_};
  const std::vector<std::size_t> want_last{batch, hidden_};
  if (grad_out.shape() != (cached_all_ ? want_all : want_last)) {
    throw ShapeError("lstm " + weight.name + ": upstream gradient " +
                     grad_out.shape_str() + " does not match forward output");
  }

  Tensor grad_x({batch, steps, in_});
  std::vector<double> dh(batch * hw, 0.0), dc(batch * hw, 0.0);
  Tensor dgates({batch, gw});
  Tensor dxh({batch, xw});

  ConstMatMap w_map(weight.value.data(), static_cast<Eigen::Index>(xw),
                    static_cast<Eigen::Index>(gw));

  for (std::size_t t = steps; t-- > 0;) {
    // fold in the upstream gradient for this step's hidden output
    if (cached_all_) {
      for (std::size_t b = 0; b < batch; ++b) {
        const double* g = grad_out.data() + (b * steps + t) * hw;
        for (std::size_t j = 0; j < hw; ++j) dh[b * hw + j] += g[j];
      }
    } else if (t == steps - 1) {
      std::memcpy(dh.data(), grad_out.data(), batch * hw * sizeof(double));
    }

    const double* gates_t = gates_.data() + t * batch * gw;
    const double* tc_t = tanh_c_.data() + t * batch * hw;
    const double* c_prev =
        t > 0 ? cells_.data() + (t - 1) * batch * hw : nullptr;

    for (std::size_t b = 0; b < batch; ++b) {
      const double* g = gates_t + b * gw;
      double* dg_row = dgates.data() + b * gw;
      for (std::size_t j = 0; j < hw; ++j) {
        const std::size_t k = b * hw + j;
        const double i_g = g[j], f_g = g[hidden_ + j], o_g = g[2 * hidden_ + j],
                     g_g = g[3 * hidden_ + j];
        const double tc = tc_t[k];
        const double d_o = dh[k] * tc;
        const double dc_total = dc[k] + dh[k] * o_g * (1.0 - tc * tc);
        const double d_i = dc_total * g_g;
        const double d_g = dc_total * i_g;
        const double d_f = dc_total * (c_prev ? c_prev[k] : 0.0);
        dc[k] = dc_total * f_g;  // carried to step t-1
        dg_row[j] = d_i * i_g * (1.0 - i_g);
        dg_row[hidden_ + j] = d_f * f_g * (1.0 - f_g);
        dg_row[2 * hidden_ + j] = d_o * o_g * (1.0 - o_g);
        dg_row[3 * hidden_ + j] = d_g * (1.0 - g_g * g_g);
      }
    }

    const double* xh_t = xh_.data() + t * batch * xw;
    if (accumulate_grads) {
      MatMap(weight.grad.data(), static_cast<Eigen::Index>(xw),
             static_cast<Eigen::Index>(gw))
          .noalias() += ConstMatMap(xh_t, static_cast<Eigen::Index>(batch),
                                    static_cast<Eigen::Index>(xw))
                            .transpose() *
                        ConstMatMap(dgates.data(),
                                    static_cast<Eigen::Index>(batch),
                                    static_cast<Eigen::Index>(gw));
      VecMap(bias.grad.data(), static_cast<Eigen::Index>(gw)) +=
          ConstMatMap(dgates.data(), static_cast<Eigen::Index>(batch),
                      static_cast<Eigen::Index>(gw))
              .colwise()
              .sum();
    }

    MatMap(dxh.data(), static_cast<Eigen::Index>(batch),
           static_cast<Eigen::Index>(xw))
        .noalias() = ConstMatMap(dgates.data(),
                                 static_cast<Eigen::Index>(batch),
                                 static_cast<Eigen::Index>(gw)) *
                     w_map.transpose();

    for (std::size_t b = 0; b < batch; ++b) {
      const double* row = dxh.data() + b * xw;
      std::memcpy(grad_x.data() + (b * steps + t) * in_, row,
                  in_ * sizeof(double));
      std::memcpy(dh.data() + b * hw, row + in_, hw * sizeof(double));
    }
  }
  return grad_x;
}

// --------------------------------------------------------------- Conv1d --

Conv1d::Conv1d(std::string name, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel)
    : kernels(name + ".kernels", {out_channels, in_channels, kernel}),
      bias(name + ".bias", {out_channels}),
      cin_(in_channels),
      cout_(out_channels),
      kernel_(kernel) {}

void Conv1d::init(Rng& rng) {
  uniform_init(kernels.value,
               1.0 / std::sqrt(static_cast<double>(cin_ * kernel_)), rng);
  bias.value.fill(0.0);
}

Tensor Conv1d::forward(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != cin_) {
    throw ShapeError("conv1d " + kernels.name + ": expected input [batch," +
                     std::to_string(cin_) + ",L], got " + x.shape_str());
  }
  const std::size_t batch = x.dim(0), len = x.dim(2);
  if (len < kernel_) {
    throw ShapeError("conv1d " + kernels.name + ": kernel length " +
                     std::to_string(kernel_) + " exceeds input length " +
                     std::to_string(len));
  }
  b_ = batch;
  len_ = len;
  const std::size_t lout = len - kernel_ + 1;
  const std::size_t patch = cin_ * kernel_;

  cols_ = Tensor({batch * lout, patch});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < lout; ++l) {
      double* row = cols_.data() + (b * lout + l) * patch;
      for (std::size_t ci = 0; ci < cin_; ++ci) {
        std::memcpy(row + ci * kernel_, x.data() + (b * cin_ + ci) * len + l,
                    kernel_ * sizeof(double));
      }
    }
  }

  const Tensor k2 = kernels.value.reshaped({cout_, patch});
  y_rows_ = Tensor({batch * lout, cout_});
  gemm(cols_, false, k2, true, y_rows_);
  MatMap(y_rows_.data(), static_cast<Eigen::Index>(batch * lout),
         static_cast<Eigen::Index>(cout_))
      .rowwise() += ConstVecMap(bias.value.data(),
                                static_cast<Eigen::Index>(cout_));

  Tensor y({batch, cout_, lout});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < lout; ++l) {
      const double* row = y_rows_.data() + (b * lout + l) * cout_;
      for (std::size_t co = 0; co < cout_; ++co) {
        y(b, co, l) = row[co];
      }
    }
  }
  return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
  const std::size_t batch = b_, len = len_;
  const std::size_t lout = len - kernel_ + 1;
  const std::size_t patch = cin_ * kernel_;
  if (grad_out.shape() != std::vector<std::size_t>{batch, cout_, lout}) {
    throw ShapeError("conv1d " + kernels.name + ": upstream gradient " +
                     grad_out.shape_str() + " does not match output [" +
                     std::to_string(batch) + "," + std::to_string(cout_) + "," +
                     std::to_string(lout) + "]");
  }

  Tensor g_rows({batch * lout, cout_});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < lout; ++l) {
      double* row = g_rows.data() + (b * lout + l) * cout_;
      for (std::size_t co = 0; co < cout_; ++co) {
        row[co] = grad_out(b, co, l);
      }
    }
  }

  if (accumulate_grads) {
    // kernels.grad is [Cout,Cin,k]; flat row-major that is [Cout, Cin*k]
    MatMap(kernels.grad.data(), static_cast<Eigen::Index>(cout_),
           static_cast<Eigen::Index>(patch))
        .noalias() += ConstMatMap(g_rows.data(),
                                  static_cast<Eigen::Index>(batch * lout),
                                  static_cast<Eigen::Index>(cout_))
                          .transpose() *
                      ConstMatMap(cols_.data(),
                                  static_cast<Eigen::Index>(batch * lout),
                                  static_cast<Eigen::Index>(patch));
    VecMap(bias.grad.data(), static_cast<Eigen::Index>(cout_)) +=
        ConstMatMap(g_rows.data(), static_cast<Eigen::Index>(batch * lout),
                    static_cast<Eigen::Index>(cout_))
            .colwise()
            .sum();
  }

  const Tensor k2 = kernels.value.reshaped({cout_, patch});
  Tensor dcols({batch * lout, patch});
  gemm(g_rows, false, k2, false, dcols);

  Tensor grad_x({batch, cin_, len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < lout; ++l) {
      const double* row = dcols.data() + (b * lout + l) * patch;
      for (std::size_t ci = 0; ci < cin_; ++ci) {
        double* dst = grad_x.data() + (b * cin_ + ci) * len + l;
        const double* src = row + ci * kernel_;
        for (std::size_t t = 0; t < kernel_; ++t) dst[t] += src[t];
      }
    }
  }
  return grad_x;
}

// ------------------------------------------------------------ MaxPool1d --

MaxPool1d::MaxPool1d(std::size_t window) : window_(window) {
  if (window == 0) {
    throw std::invalid_argument("maxpool1d: window must be >= 1");
  }
}

Tensor MaxPool1d::forward(const Tensor& x) {
  if (x.rank() != 3) {
    throw ShapeError("maxpool1d: expected input [batch,C,L], got " +
                     x.shape_str());
  }
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  const std::size_t lout = len / window_;
  in_shape_ = x.shape();
  argmax_.resize(batch * ch * lout);

  Tensor y({batch, ch, lout});
  const double* xd = x.data();
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    const double* src = xd + bc * len;
    for (std::size_t l = 0; l < lout; ++l) {
      std::size_t best = l * window_;
      double best_v = src[best];
      for (std::size_t t = 1; t < window_; ++t) {
        const std::size_t idx = l * window_ + t;
        if (src[idx] > best_v) {
          best_v = src[idx];
          best = idx;
        }
      }
      y[bc * lout + l] = best_v;
      argmax_[bc * lout + l] = static_cast<std::uint32_t>(bc * len + best);
    }
  }
  return y;
}

Tensor MaxPool1d::backward(const Tensor& grad_out) const {
  if (grad_out.size() != argmax_.size()) {
    throw ShapeError("maxpool1d: upstream gradient " + grad_out.shape_str() +
                     " does not match pooled output");
  }
  Tensor grad_x(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) {
    grad_x[argmax_[i]] += grad_out[i];
  }
  return grad_x;
}

}  // namespace ecg::nn
