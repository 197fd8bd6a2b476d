// SPDX-License-Identifier: Apache-2.0
#include "dysfl/autodiff.hpp"

#include <cmath>

namespace dysfl::ad {

const Mat& Value::val() const { return tape_->value_of(id_); }
const Mat& Value::grad() const { return tape_->grad_of(id_); }

int Tape::push(Mat value, bool requires_grad, std::function<void(Tape&)> fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(fn);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = node(id);
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
  n.visited = true;
}

void Tape::check_same_shape(Value a, Value b, const char* op) const {
  if (a.val().rows() != b.val().rows() || a.val().cols() != b.val().cols()) {
    throw DataError(std::string(op) + ": shape mismatch (" + std::to_string(a.val().rows()) +
                    "x" + std::to_string(a.val().cols()) + " vs " +
                    std::to_string(b.val().rows()) + "x" + std::to_string(b.val().cols()) + ")");
  }
}

Value Tape::constant(Mat v) { return Value(this, push(std::move(v), false, nullptr)); }
Value Tape::leaf(Mat v) { return Value(this, push(std::move(v), true, nullptr)); }

Value Tape::add(Value a, Value b) {
  check_same_shape(a, b, "add");
  const int ia = a.id_, ib = b.id_;
  const bool rg = node(ia).requires_grad || node(ib).requires_grad;
  const int out = push(a.val() + b.val(), rg, nullptr);
  node(out).backprop = [ia, ib, out](Tape& t) {
    t.accumulate(ia, t.grad_of(out));
    t.accumulate(ib, t.grad_of(out));
  };
  return Value(this, out);
}

Value Tape::sub(Value a, Value b) {
  check_same_shape(a, b, "sub");
  const int ia = a.id_, ib = b.id_;
  const bool rg = node(ia).requires_grad || node(ib).requires_grad;
  const int out = push(a.val() - b.val(), rg, nullptr);
  node(out).backprop = [ia, ib, out](Tape& t) {
    t.accumulate(ia, t.grad_of(out));
    t.accumulate(ib, Mat(-t.grad_of(out)));
  };
  return Value(this, out);
}

Value Tape::mul(Value a, Value b) {
  check_same_shape(a, b, "mul");
  const int ia = a.id_, ib = b.id_;
  const bool rg = node(ia).requires_grad || node(ib).requires_grad;
  const int out = push(a.val().cwiseProduct(b.val()), rg, nullptr);
  node(out).backprop = [ia, ib, out](Tape& t) {
    t.accumulate(ia, t.grad_of(out).cwiseProduct(t.value_of(ib)));
    t.accumulate(ib, t.grad_of(out).cwiseProduct(t.value_of(ia)));
  };
  return Value(this, out);
}

Value Tape::add_scalar(Value a, double s) {
  const int ia = a.id_;
  const int out = push(a.val().array() + s, node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) { t.accumulate(ia, t.grad_of(out)); };
  return Value(this, out);
}

Value Tape::mul_scalar(Value a, double s) {
  const int ia = a.id_;
  const int out = push(a.val() * s, node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out, s](Tape& t) { t.accumulate(ia, Mat(t.grad_of(out) * s)); };
  return Value(this, out);
}

Value Tape::rsub_scalar(Value a, double s) {
  const int ia = a.id_;
  const int out = push((s - a.val().array()).matrix(), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) { t.accumulate(ia, Mat(-t.grad_of(out))); };
  return Value(this, out);
}

Value Tape::square(Value a) {
  const int ia = a.id_;
  const int out = push(a.val().array().square().matrix(), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    t.accumulate(ia, Mat(2.0 * t.grad_of(out).cwiseProduct(t.value_of(ia))));
  };
  return Value(this, out);
}

Value Tape::relu(Value a) {
  const int ia = a.id_;
  const int out = push(a.val().cwiseMax(0.0), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    const Mat mask = (t.value_of(ia).array() > 0.0).cast<double>();
    t.accumulate(ia, t.grad_of(out).cwiseProduct(mask));
  };
  return Value(this, out);
}

namespace {
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;
}  // namespace

Value Tape::gelu(Value a) {
  const int ia = a.id_;
  const Mat& x = a.val();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i);
    y(i) = 0.5 * v * (1.0 + std::tanh(kGeluScale * (v + kGeluCubic * v * v * v)));
  }
  const int out = push(std::move(y), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    const Mat& x2 = t.value_of(ia);
    Mat d(x2.rows(), x2.cols());
    for (Eigen::Index i = 0; i < x2.size(); ++i) {
      const double v = x2(i);
      const double inner = kGeluScale * (v + kGeluCubic * v * v * v);
      const double th = std::tanh(inner);
      const double sech2 = 1.0 - th * th;
      d(i) = 0.5 * (1.0 + th) +
             0.5 * v * sech2 * kGeluScale * (1.0 + 3.0 * kGeluCubic * v * v);
    }
    t.accumulate(ia, t.grad_of(out).cwiseProduct(d));
  };
  return Value(this, out);
}

Value Tape::sigmoid(Value a) {
  const int ia = a.id_;
  const Mat& x = a.val();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i);
    y(i) = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  const int out = push(std::move(y), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    const Mat& s = t.value_of(out);
    t.accumulate(ia, Mat(t.grad_of(out).cwiseProduct(
                        s.cwiseProduct((1.0 - s.array()).matrix()))));
  };
  return Value(this, out);
}

Value Tape::log_clamped(Value a, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw DataError("log_clamped: bad clamp range");
  const int ia = a.id_;
  const Mat clamped = a.val().cwiseMax(lo).cwiseMin(hi);
  const int out = push(clamped.array().log().matrix(), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out, lo, hi](Tape& t) {
    const Mat& x = t.value_of(ia);
    Mat d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      d(i) = (x(i) > lo && x(i) < hi) ? 1.0 / x(i) : 0.0;
    }
    t.accumulate(ia, t.grad_of(out).cwiseProduct(d));
  };
  return Value(this, out);
}

Value Tape::matmul(Value a, Value b) {
  if (a.val().cols() != b.val().rows()) throw DataError("matmul: inner dimension mismatch");
  const int ia = a.id_, ib = b.id_;
  const bool rg = node(ia).requires_grad || node(ib).requires_grad;
  const int out = push(a.val() * b.val(), rg, nullptr);
  node(out).backprop = [ia, ib, out](Tape& t) {
    t.accumulate(ia, Mat(t.grad_of(out) * t.value_of(ib).transpose()));
    t.accumulate(ib, Mat(t.value_of(ia).transpose() * t.grad_of(out)));
  };
  return Value(this, out);
}

Value Tape::matmul_nt(Value a, Value b) {
  if (a.val().cols() != b.val().cols()) throw DataError("matmul_nt: inner dimension mismatch");
  const int ia = a.id_, ib = b.id_;
  const bool rg = node(ia).requires_grad || node(ib).requires_grad;
  const int out = push(a.val() * b.val().transpose(), rg, nullptr);
  node(out).backprop = [ia, ib, out](Tape& t) {
    t.accumulate(ia, Mat(t.grad_of(out) * t.value_of(ib)));
    t.accumulate(ib, Mat(t.grad_of(out).transpose() * t.value_of(ia)));
  };
  return Value(this, out);
}

Value Tape::add_row_broadcast(Value x, Value row) {
  if (row.val().rows() != 1 || row.val().cols() != x.val().cols()) {
    throw DataError("add_row_broadcast: row vector shape mismatch");
  }
  const int ix = x.id_, ir = row.id_;
  const bool rg = node(ix).requires_grad || node(ir).requires_grad;
  Mat y = x.val();
  y.rowwise() += row.val().row(0);
  const int out = push(std::move(y), rg, nullptr);
  node(out).backprop = [ix, ir, out](Tape& t) {
    t.accumulate(ix, t.grad_of(out));
    t.accumulate(ir, Mat(t.grad_of(out).colwise().sum()));
  };
  return Value(this, out);
}

Value Tape::slice_cols(Value a, int col0, int ncols) {
  if (col0 < 0 || ncols < 1 || col0 + ncols > a.val().cols()) {
    throw DataError("slice_cols: range outside matrix");
  }
  const int ia = a.id_;
  const int out = push(a.val().middleCols(col0, ncols), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out, col0, ncols](Tape& t) {
    Mat full = Mat::Zero(t.value_of(ia).rows(), t.value_of(ia).cols());
    full.middleCols(col0, ncols) = t.grad_of(out);
    t.accumulate(ia, full);
  };
  return Value(this, out);
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw DataError("concat_cols: nothing to concatenate");
  Eigen::Index rows = parts.front().val().rows();
  Eigen::Index cols = 0;
  bool rg = false;
  std::vector<int> ids;
  std::vector<int> widths;
  for (const Value& p : parts) {
    if (p.val().rows() != rows) throw DataError("concat_cols: row count mismatch");
    cols += p.val().cols();
    ids.push_back(p.id_);
    widths.push_back(static_cast<int>(p.val().cols()));
    rg = rg || node(p.id_).requires_grad;
  }
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (const Value& p : parts) {
    y.middleCols(at, p.val().cols()) = p.val();
    at += p.val().cols();
  }
  const int out = push(std::move(y), rg, nullptr);
  node(out).backprop = [ids, widths, out](Tape& t) {
    Eigen::Index at2 = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.accumulate(ids[i], t.grad_of(out).middleCols(at2, widths[i]));
      at2 += widths[i];
    }
  };
  return Value(this, out);
}

Value Tape::softmax_rows(Value a) {
  const int ia = a.id_;
  const Mat& x = a.val();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const Eigen::ArrayXd e = (x.row(r).array() - m).exp();
    y.row(r) = (e / e.sum()).matrix();
  }
  const int out = push(std::move(y), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    const Mat& s = t.value_of(out);
    const Mat& g = t.grad_of(out);
    Mat d(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double dot = s.row(r).dot(g.row(r));
      d.row(r) = s.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
    }
    t.accumulate(ia, d);
  };
  return Value(this, out);
}

Value Tape::layer_norm_rows(Value x, Value gamma, Value beta, double eps) {
  const Mat& xv = x.val();
  if (gamma.val().rows() != 1 || gamma.val().cols() != xv.cols() ||
      beta.val().rows() != 1 || beta.val().cols() != xv.cols()) {
    throw DataError("layer_norm_rows: gamma/beta must be 1 x width");
  }
  const int ix = x.id_, ig = gamma.id_, ib = beta.id_;
  const bool rg =
      node(ix).requires_grad || node(ig).requires_grad || node(ib).requires_grad;
  const auto n = static_cast<double>(xv.cols());
  Mat xhat(xv.rows(), xv.cols());
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std(r) = inv;
    xhat.row(r) = ((xv.row(r).array() - mean) * inv).matrix();
  }
  Mat y = xhat;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    y.row(r) = y.row(r).cwiseProduct(gamma.val().row(0)) + beta.val().row(0);
  }
  const int out = push(std::move(y), rg, nullptr);
  node(out).backprop = [ix, ig, ib, out, xhat, inv_std, n](Tape& t) {
    const Mat& g = t.grad_of(out);
    t.accumulate(ib, Mat(g.colwise().sum()));
    t.accumulate(ig, Mat(g.cwiseProduct(xhat).colwise().sum()));
    const Mat& gam = t.value_of(ig);
    Mat dx(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gam.row(0));
      const double m1 = dxhat.mean();
      const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
      dx.row(r) = inv_std(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
    }
    t.accumulate(ix, dx);
  };
  return Value(this, out);
}

Value Tape::transpose(Value a) {
  const int ia = a.id_;
  const int out = push(a.val().transpose(), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    t.accumulate(ia, Mat(t.grad_of(out).transpose()));
  };
  return Value(this, out);
}

Value Tape::sum(Value a) {
  const int ia = a.id_;
  Mat y(1, 1);
  y(0, 0) = a.val().sum();
  const int out = push(std::move(y), node(ia).requires_grad, nullptr);
  node(out).backprop = [ia, out](Tape& t) {
    t.accumulate(ia, Mat(Mat::Constant(t.value_of(ia).rows(), t.value_of(ia).cols(),
                                       t.grad_of(out)(0, 0))));
  };
  return Value(this, out);
}

Value Tape::conv1d_depthwise(Value x, Value w, Value b, int stride, int pad) {
  const Mat& xv = x.val();
  const Mat& wv = w.val();
  const int channels = static_cast<int>(xv.rows());
  const int time = static_cast<int>(xv.cols());
  const int kernel = static_cast<int>(wv.cols());
  if (wv.rows() != channels) throw DataError("conv1d_depthwise: weight channel mismatch");
  if (b.val().rows() != channels || b.val().cols() != 1) {
    throw DataError("conv1d_depthwise: bias must be channels x 1");
  }
  if (stride < 1) throw DataError("conv1d_depthwise: bad stride");
  const int out_time = (time + 2 * pad - kernel) / stride + 1;
  if (out_time < 1) throw DataError("conv1d_depthwise: input too short");
  const int ix = x.id_, iw = w.id_, ib = b.id_;
  const bool rg =
      node(ix).requires_grad || node(iw).requires_grad || node(ib).requires_grad;
  Mat y(channels, out_time);
  for (int c = 0; c < channels; ++c) {
    for (int t = 0; t < out_time; ++t) {
      double acc = b.val()(c, 0);
      for (int k = 0; k < kernel; ++k) {
        const int idx = t * stride + k - pad;
        if (idx >= 0 && idx < time) acc += xv(c, idx) * wv(c, k);
      }
      y(c, t) = acc;
    }
  }
  const int out = push(std::move(y), rg, nullptr);
  node(out).backprop = [ix, iw, ib, out, stride, pad, kernel, time](Tape& t) {
    const Mat& g = t.grad_of(out);
    const Mat& xv2 = t.value_of(ix);
    const Mat& wv2 = t.value_of(iw);
    Mat dx = Mat::Zero(xv2.rows(), xv2.cols());
    Mat dw = Mat::Zero(wv2.rows(), wv2.cols());
    Mat db = Mat::Zero(xv2.rows(), 1);
    for (int c = 0; c < static_cast<int>(xv2.rows()); ++c) {
      for (int to = 0; to < static_cast<int>(g.cols()); ++to) {
        const double gv = g(c, to);
        db(c, 0) += gv;
        for (int k = 0; k < kernel; ++k) {
          const int idx = to * stride + k - pad;
          if (idx >= 0 && idx < time) {
            dw(c, k) += gv * xv2(c, idx);
            dx(c, idx) += gv * wv2(c, k);
          }
        }
      }
    }
    t.accumulate(ix, dx);
    t.accumulate(iw, dw);
    t.accumulate(ib, db);
  };
  return Value(this, out);
}

Value Tape::conv1d_grouped(Value x, Value w, Value b, int groups, int stride, int pad) {
  const Mat& xv = x.val();
  const Mat& wv = w.val();
  const int in_channels = static_cast<int>(xv.rows());
  const int time = static_cast<int>(xv.cols());
  const int out_channels = static_cast<int>(wv.rows());
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw DataError("conv1d_grouped: groups must divide both channel counts");
  }
  const int cig = in_channels / groups;
  if (wv.cols() % cig != 0) throw DataError("conv1d_grouped: weight width mismatch");
  const int kernel = static_cast<int>(wv.cols()) / cig;
  if (b.val().rows() != out_channels || b.val().cols() != 1) {
    throw DataError("conv1d_grouped: bias must be out_channels x 1");
  }
  if (stride < 1) throw DataError("conv1d_grouped: bad stride");
  const int out_time = (time + 2 * pad - kernel) / stride + 1;
  if (out_time < 1) throw DataError("conv1d_grouped: input too short");
  const int cog = out_channels / groups;
  const int ix = x.id_, iw = w.id_, ib = b.id_;
  const bool rg =
      node(ix).requires_grad || node(iw).requires_grad || node(ib).requires_grad;
  Mat y(out_channels, out_time);
  for (int o = 0; o < out_channels; ++o) {
    const int g0 = (o / cog) * cig;
    for (int t = 0; t < out_time; ++t) {
      double acc = b.val()(o, 0);
      for (int ci = 0; ci < cig; ++ci) {
        for (int k = 0; k < kernel; ++k) {
          const int idx = t * stride + k - pad;
          if (idx >= 0 && idx < time) acc += xv(g0 + ci, idx) * wv(o, ci * kernel + k);
        }
      }
      y(o, t) = acc;
    }
  }
  const int out = push(std::move(y), rg, nullptr);
  node(out).backprop = [ix, iw, ib, out, groups, stride, pad, kernel, time, cig, cog](Tape& t) {
    const Mat& g = t.grad_of(out);
    const Mat& xv2 = t.value_of(ix);
    const Mat& wv2 = t.value_of(iw);
    Mat dx = Mat::Zero(xv2.rows(), xv2.cols());
    Mat dw = Mat::Zero(wv2.rows(), wv2.cols());
    Mat db = Mat::Zero(wv2.rows(), 1);
    for (int o = 0; o < static_cast<int>(wv2.rows()); ++o) {
      const int g0 = (o / cog) * cig;
      for (int to = 0; to < static_cast<int>(g.cols()); ++to) {
        const double gv = g(o, to);
        db(o, 0) += gv;
        for (int ci = 0; ci < cig; ++ci) {
          for (int k = 0; k < kernel; ++k) {
            const int idx = to * stride + k - pad;
            if (idx >= 0 && idx < time) {
              dw(o, ci * kernel + k) += gv * xv2(g0 + ci, idx);
              dx(g0 + ci, idx) += gv * wv2(o, ci * kernel + k);
            }
          }
        }
      }
    }
    t.accumulate(ix, dx);
    t.accumulate(iw, dw);
    t.accumulate(ib, db);
  };
  return Value(this, out);
}

void Tape::backward(Value output) {
  if (output.tape_ != this) throw DataError("backward: value from another tape");
  if (output.val().rows() != 1 || output.val().cols() != 1) {
    throw DataError("backward: output must be a 1x1 scalar");
  }
  for (Node& n : nodes_) {
    n.grad.resize(0, 0);
    n.visited = false;
  }
  Node& seed = node(output.id_);
  seed.grad = Mat::Ones(1, 1);
  seed.visited = seed.requires_grad;
  for (int id = output.id_; id >= 0; --id) {
    Node& n = node(id);
    if (id != output.id_ && !n.visited) continue;
    if (n.backprop && n.grad.size() != 0) n.backprop(*this);
  }
}

bool Tape::reached(Value v) const {
  if (v.tape_ != this) throw DataError("reached: value from another tape");
  return node(v.id_).visited;
}

}  // namespace dysfl::ad
