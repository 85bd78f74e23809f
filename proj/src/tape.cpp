#include "otclab/tape.hpp"

#include <cmath>

namespace otclab {

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw UsageError("var does not belong to this tape");
  }
}

int Tape::push(Tensor value, std::vector<int> parents,
               std::function<void(Tape&, int)> backprop) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.requires_grad = needs_grad(n.parents);
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

bool Tape::needs_grad(const std::vector<int>& parents) const {
  for (int p : parents) {
    if (nodes_[p].requires_grad) return true;
  }
  return false;
}

Var Tape::input(Tensor v) {
  Node n;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const std::string& name, Tensor v) {
  Node n;
  n.value = std::move(v);
  n.requires_grad = true;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::add(Var a, Var b) {
  check(a); check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  if (!x.same_shape(y)) {
    throw ShapeError("add shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  }
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  const int ai = a.id, bi = b.id;
  return Var{push(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    if (t.nodes_[ai].requires_grad) {
      Tensor& ga = t.gbuf(ai);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.nodes_[bi].requires_grad) {
      Tensor& gb = t.gbuf(bi);
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  })};
}

Var Tape::sub(Var a, Var b) {
  check(a); check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  if (!x.same_shape(y)) {
    throw ShapeError("sub shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  }
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  const int ai = a.id, bi = b.id;
  return Var{push(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    if (t.nodes_[ai].requires_grad) {
      Tensor& ga = t.gbuf(ai);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.nodes_[bi].requires_grad) {
      Tensor& gb = t.gbuf(bi);
      for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  })};
}

Var Tape::add_rowvec(Var a, Var v) {
  check(a); check(v);
  const Tensor& x = val(a.id);
  const Tensor& b = val(v.id);
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("add_rowvec expects [1," + std::to_string(x.cols()) +
                     "], got " + b.shape_str());
  }
  Tensor out = x;
  for (int r = 0; r < out.rows(); ++r) {
    double* orow = out.row_ptr(r);
    for (int c = 0; c < out.cols(); ++c) orow[c] += b[c];
  }
  const int ai = a.id, vi = v.id;
  return Var{push(std::move(out), {ai, vi}, [ai, vi](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    if (t.nodes_[ai].requires_grad) {
      Tensor& ga = t.gbuf(ai);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.nodes_[vi].requires_grad) {
      Tensor& gv = t.gbuf(vi);
      for (int r = 0; r < g.rows(); ++r) {
        const double* grow = g.row_ptr(r);
        for (int c = 0; c < g.cols(); ++c) gv[c] += grow[c];
      }
    }
  })};
}

Var Tape::scale(Var a, double c) {
  check(a);
  Tensor out = val(a.id);
  for (size_t i = 0; i < out.size(); ++i) out[i] *= c;
  const int ai = a.id;
  return Var{push(std::move(out), {ai}, [ai, c](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    Tensor& ga = t.gbuf(ai);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  })};
}

Var Tape::mul(Var a, Var b) {
  check(a); check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  if (!x.same_shape(y)) {
    throw ShapeError("mul shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  }
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  const int ai = a.id, bi = b.id;
  return Var{push(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& x2 = t.val(ai);
    const Tensor& y2 = t.val(bi);
    if (t.nodes_[ai].requires_grad) {
      Tensor& ga = t.gbuf(ai);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y2[i];
    }
    if (t.nodes_[bi].requires_grad) {
      Tensor& gb = t.gbuf(bi);
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x2[i];
    }
  })};
}

Var Tape::mul_scalar(Var a, Var s) {
  check(a); check(s);
  const Tensor& x = val(a.id);
  const Tensor& sv = val(s.id);
  if (sv.size() != 1) throw ShapeError("mul_scalar expects 1x1 scalar, got " + sv.shape_str());
  const double c = sv[0];
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= c;
  const int ai = a.id, si = s.id;
  return Var{push(std::move(out), {ai, si}, [ai, si](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& x2 = t.val(ai);
    const double c2 = t.val(si)[0];
    if (t.nodes_[ai].requires_grad) {
      Tensor& ga = t.gbuf(ai);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += c2 * g[i];
    }
    if (t.nodes_[si].requires_grad) {
      double acc = 0.0;
      for (size_t i = 0; i < g.size(); ++i) acc += g[i] * x2[i];
      t.gbuf(si)[0] += acc;
    }
  })};
}

Var Tape::exp_scalar(Var s) {
  check(s);
  const Tensor& sv = val(s.id);
  if (sv.size() != 1) throw ShapeError("exp_scalar expects 1x1 scalar, got " + sv.shape_str());
  const double y = std::exp(sv[0]);
  const int si = s.id;
  return Var{push(Tensor::scalar(y), {si}, [si, y](Tape& t, int self) {
    t.gbuf(si)[0] += y * t.gbuf(self)[0];
  })};
}

Var Tape::matmul(Var a, Var b) {
  check(a); check(b);
  Tensor out = matmul_plain(val(a.id), val(b.id));
  const int ai = a.id, bi = b.id;
  return Var{push(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& x = t.val(ai);
    const Tensor& y = t.val(bi);
    if (t.nodes_[ai].requires_grad) {
      // dA += G * B^T
      Tensor bt = transpose_plain(y);
      matmul_into(t.gbuf(ai), g, bt, /*accumulate=*/true);
    }
    if (t.nodes_[bi].requires_grad) {
      // dB += A^T * G
      Tensor at = transpose_plain(x);
      matmul_into(t.gbuf(bi), at, g, /*accumulate=*/true);
    }
  })};
}

Var Tape::transpose(Var a) {
  check(a);
  const int ai = a.id;
  return Var{push(transpose_plain(val(a.id)), {ai}, [ai](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    Tensor& ga = t.gbuf(ai);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
  })};
}

Var Tape::relu(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  const int ai = a.id;
  return Var{push(std::move(out), {ai}, [ai](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& x = t.val(ai);
    Tensor& ga = t.gbuf(ai);
    for (size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  })};
}

Var Tape::row_softmax(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  Tensor out(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.row_ptr(r);
    double* yr = out.row_ptr(r);
    double mx = xr[0];
    for (int c = 1; c < x.cols(); ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (int c = 0; c < x.cols(); ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (int c = 0; c < x.cols(); ++c) yr[c] /= sum;
  }
  const int ai = a.id;
  return Var{push(std::move(out), {ai}, [ai](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& y = t.val(self);
    Tensor& ga = t.gbuf(ai);
    for (int r = 0; r < g.rows(); ++r) {
      const double* gr = g.row_ptr(r);
      const double* yr = y.row_ptr(r);
      double dot = 0.0;
      for (int c = 0; c < g.cols(); ++c) dot += gr[c] * yr[c];
      double* gar = ga.row_ptr(r);
      for (int c = 0; c < g.cols(); ++c) gar[c] += yr[c] * (gr[c] - dot);
    }
  })};
}

Var Tape::l2_normalize_rows(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  Tensor out(x.rows(), x.cols());
  std::vector<double> norms(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.row_ptr(r);
    double ss = 0.0;
    for (int c = 0; c < x.cols(); ++c) ss += xr[c] * xr[c];
    const double nrm = std::sqrt(ss);
    if (nrm == 0.0) {
      throw NumericError("l2_normalize_rows: zero-norm row " + std::to_string(r));
    }
    norms[r] = nrm;
    double* yr = out.row_ptr(r);
    for (int c = 0; c < x.cols(); ++c) yr[c] = xr[c] / nrm;
  }
  const int ai = a.id;
  return Var{push(std::move(out), {ai},
                  [ai, norms = std::move(norms)](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& y = t.val(self);
    Tensor& ga = t.gbuf(ai);
    for (int r = 0; r < g.rows(); ++r) {
      const double* gr = g.row_ptr(r);
      const double* yr = y.row_ptr(r);
      double dot = 0.0;
      for (int c = 0; c < g.cols(); ++c) dot += gr[c] * yr[c];
      double* gar = ga.row_ptr(r);
      for (int c = 0; c < g.cols(); ++c) gar[c] += (gr[c] - yr[c] * dot) / norms[r];
    }
  })};
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  check(x); check(gain); check(bias);
  const Tensor& xv = val(x.id);
  const Tensor& gv = val(gain.id);
  const Tensor& bv = val(bias.id);
  const int n = xv.cols();
  if (gv.rows() != 1 || gv.cols() != n || bv.rows() != 1 || bv.cols() != n) {
    throw ShapeError("layer_norm gain/bias must be [1," + std::to_string(n) + "]");
  }
  Tensor out(xv.rows(), n);
  Tensor xhat(xv.rows(), n);
  std::vector<double> inv_sigma(xv.rows());
  for (int r = 0; r < xv.rows(); ++r) {
    const double* xr = xv.row_ptr(r);
    double mean = 0.0;
    for (int c = 0; c < n; ++c) mean += xr[c];
    mean /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) {
      const double d = xr[c] - mean;
      var += d * d;
    }
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    double* hr = xhat.row_ptr(r);
    double* yr = out.row_ptr(r);
    for (int c = 0; c < n; ++c) {
      hr[c] = (xr[c] - mean) * is;
      yr[c] = hr[c] * gv[c] + bv[c];
    }
  }
  const int xi = x.id, gi = gain.id, bi = bias.id;
  return Var{push(std::move(out), {xi, gi, bi},
                  [xi, gi, bi, xhat = std::move(xhat),
                   inv_sigma = std::move(inv_sigma)](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& gainv = t.val(gi);
    const int n2 = g.cols();
    if (t.nodes_[gi].requires_grad) {
      Tensor& gg = t.gbuf(gi);
      for (int r = 0; r < g.rows(); ++r) {
        const double* gr = g.row_ptr(r);
        const double* hr = xhat.row_ptr(r);
        for (int c = 0; c < n2; ++c) gg[c] += gr[c] * hr[c];
      }
    }
    if (t.nodes_[bi].requires_grad) {
      Tensor& gb = t.gbuf(bi);
      for (int r = 0; r < g.rows(); ++r) {
        const double* gr = g.row_ptr(r);
        for (int c = 0; c < n2; ++c) gb[c] += gr[c];
      }
    }
    if (t.nodes_[xi].requires_grad) {
      Tensor& gx = t.gbuf(xi);
      for (int r = 0; r < g.rows(); ++r) {
        const double* gr = g.row_ptr(r);
        const double* hr = xhat.row_ptr(r);
        double mean_dh = 0.0, mean_dhh = 0.0;
        for (int c = 0; c < n2; ++c) {
          const double dh = gr[c] * gainv[c];
          mean_dh += dh;
          mean_dhh += dh * hr[c];
        }
        mean_dh /= n2;
        mean_dhh /= n2;
        double* gxr = gx.row_ptr(r);
        for (int c = 0; c < n2; ++c) {
          const double dh = gr[c] * gainv[c];
          gxr[c] += inv_sigma[r] * (dh - mean_dh - hr[c] * mean_dhh);
        }
      }
    }
  })};
}

Var Tape::embedding_lookup(Var table, const std::vector<int>& ids) {
  check(table);
  const Tensor& tab = val(table.id);
  if (ids.empty()) throw ShapeError("embedding_lookup: empty id list");
  Tensor out(static_cast<int>(ids.size()), tab.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) {
      throw UsageError("embedding_lookup: id " + std::to_string(ids[i]) +
                       " out of range [0," + std::to_string(tab.rows()) + ")");
    }
    const double* src = tab.row_ptr(ids[i]);
    double* dst = out.row_ptr(static_cast<int>(i));
    for (int c = 0; c < tab.cols(); ++c) dst[c] = src[c];
  }
  const int ti = table.id;
  return Var{push(std::move(out), {ti}, [ti, ids](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    Tensor& gt = t.gbuf(ti);
    for (size_t i = 0; i < ids.size(); ++i) {
      const double* gr = g.row_ptr(static_cast<int>(i));
      double* dst = gt.row_ptr(ids[i]);
      for (int c = 0; c < g.cols(); ++c) dst[c] += gr[c];
    }
  })};
}

Var Tape::slice_rows(Var a, int r0, int r1) {
  check(a);
  const Tensor& x = val(a.id);
  if (r0 < 0 || r1 > x.rows() || r0 >= r1) {
    throw ShapeError("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") out of range for " + x.shape_str());
  }
  Tensor out(r1 - r0, x.cols());
  for (int r = r0; r < r1; ++r) {
    const double* src = x.row_ptr(r);
    double* dst = out.row_ptr(r - r0);
    for (int c = 0; c < x.cols(); ++c) dst[c] = src[c];
  }
  const int ai = a.id;
  return Var{push(std::move(out), {ai}, [ai, r0](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    Tensor& ga = t.gbuf(ai);
    for (int r = 0; r < g.rows(); ++r) {
      const double* gr = g.row_ptr(r);
      double* dst = ga.row_ptr(r + r0);
      for (int c = 0; c < g.cols(); ++c) dst[c] += gr[c];
    }
  })};
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  check(a);
  const Tensor& x = val(a.id);
  if (c0 < 0 || c1 > x.cols() || c0 >= c1) {
    throw ShapeError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") out of range for " + x.shape_str());
  }
  Tensor out(x.rows(), c1 - c0);
  for (int r = 0; r < x.rows(); ++r) {
    const double* src = x.row_ptr(r);
    double* dst = out.row_ptr(r);
    for (int c = c0; c < c1; ++c) dst[c - c0] = src[c];
  }
  const int ai = a.id;
  return Var{push(std::move(out), {ai}, [ai, c0](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    Tensor& ga = t.gbuf(ai);
    for (int r = 0; r < g.rows(); ++r) {
      const double* gr = g.row_ptr(r);
      double* dst = ga.row_ptr(r);
      for (int c = 0; c < g.cols(); ++c) dst[c + c0] += gr[c];
    }
  })};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  int total = 0;
  const int cols = val(parts[0].id).cols();
  std::vector<int> ids;
  for (Var p : parts) {
    check(p);
    const Tensor& t = val(p.id);
    if (t.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    total += t.rows();
    ids.push_back(p.id);
  }
  Tensor out(total, cols);
  int row = 0;
  for (int id : ids) {
    const Tensor& t = val(id);
    for (int r = 0; r < t.rows(); ++r, ++row) {
      const double* src = t.row_ptr(r);
      double* dst = out.row_ptr(row);
      for (int c = 0; c < cols; ++c) dst[c] = src[c];
    }
  }
  return Var{push(std::move(out), ids, [ids](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    int row = 0;
    for (int id : ids) {
      const int nr = t.val(id).rows();
      if (t.nodes_[id].requires_grad) {
        Tensor& gp = t.gbuf(id);
        for (int r = 0; r < nr; ++r) {
          const double* gr = g.row_ptr(row + r);
          double* dst = gp.row_ptr(r);
          for (int c = 0; c < g.cols(); ++c) dst[c] += gr[c];
        }
      }
      row += nr;
    }
  })};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const int rows = val(parts[0].id).rows();
  int total = 0;
  std::vector<int> ids;
  for (Var p : parts) {
    check(p);
    const Tensor& t = val(p.id);
    if (t.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    total += t.cols();
    ids.push_back(p.id);
  }
  Tensor out(rows, total);
  int col = 0;
  for (int id : ids) {
    const Tensor& t = val(id);
    for (int r = 0; r < rows; ++r) {
      const double* src = t.row_ptr(r);
      double* dst = out.row_ptr(r);
      for (int c = 0; c < t.cols(); ++c) dst[col + c] = src[c];
    }
    col += t.cols();
  }
  return Var{push(std::move(out), ids, [ids](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    int col = 0;
    for (int id : ids) {
      const int nc = t.val(id).cols();
      if (t.nodes_[id].requires_grad) {
        Tensor& gp = t.gbuf(id);
        for (int r = 0; r < g.rows(); ++r) {
          const double* gr = g.row_ptr(r);
          double* dst = gp.row_ptr(r);
          for (int c = 0; c < nc; ++c) dst[c] += gr[col + c];
        }
      }
      col += nc;
    }
  })};
}

Var Tape::mean_all(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += x[i];
  const double inv = 1.0 / static_cast<double>(x.size());
  const int ai = a.id;
  return Var{push(Tensor::scalar(acc * inv), {ai}, [ai, inv](Tape& t, int self) {
    const double g = t.gbuf(self)[0] * inv;
    Tensor& ga = t.gbuf(ai);
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  })};
}

Var Tape::mean_rows(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  Tensor out(1, x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.row_ptr(r);
    for (int c = 0; c < x.cols(); ++c) out[c] += xr[c];
  }
  const double inv = 1.0 / x.rows();
  for (int c = 0; c < x.cols(); ++c) out[c] *= inv;
  const int ai = a.id;
  return Var{push(std::move(out), {ai}, [ai, inv](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    Tensor& ga = t.gbuf(ai);
    for (int r = 0; r < ga.rows(); ++r) {
      double* gar = ga.row_ptr(r);
      for (int c = 0; c < g.cols(); ++c) gar[c] += g[c] * inv;
    }
  })};
}

Var Tape::cross_entropy_rows(Var probs, Var onehot) {
  check(probs); check(onehot);
  const Tensor& p = val(probs.id);
  const Tensor& y = val(onehot.id);
  if (!p.same_shape(y)) {
    throw ShapeError("cross_entropy_rows shape mismatch " + p.shape_str() + " vs " +
                     y.shape_str());
  }
  Tensor out(p.rows(), 1);
  for (int r = 0; r < p.rows(); ++r) {
    const double* pr = p.row_ptr(r);
    const double* yr = y.row_ptr(r);
    double h = 0.0;
    for (int c = 0; c < p.cols(); ++c) {
      if (yr[c] != 0.0) h -= yr[c] * std::log(std::max(pr[c], kProbClamp));
    }
    out.at(r, 0) = h;
  }
  const int pi = probs.id, yi = onehot.id;
  return Var{push(std::move(out), {pi, yi}, [pi, yi](Tape& t, int self) {
    const Tensor& g = t.gbuf(self);
    const Tensor& p2 = t.val(pi);
    const Tensor& y2 = t.val(yi);
    if (t.nodes_[pi].requires_grad) {
      Tensor& gp = t.gbuf(pi);
      for (int r = 0; r < p2.rows(); ++r) {
        const double gr = g.at(r, 0);
        const double* pr = p2.row_ptr(r);
        const double* yr = y2.row_ptr(r);
        double* gpr = gp.row_ptr(r);
        for (int c = 0; c < p2.cols(); ++c) {
          if (yr[c] != 0.0 && pr[c] > kProbClamp) gpr[c] -= gr * yr[c] / pr[c];
        }
      }
    }
    if (t.nodes_[yi].requires_grad) {
      Tensor& gy = t.gbuf(yi);
      for (int r = 0; r < p2.rows(); ++r) {
        const double gr = g.at(r, 0);
        const double* pr = p2.row_ptr(r);
        double* gyr = gy.row_ptr(r);
        for (int c = 0; c < p2.cols(); ++c) {
          gyr[c] -= gr * std::log(std::max(pr[c], kProbClamp));
        }
      }
    }
  })};
}

Gradients Tape::backward(Var loss) {
  check(loss);
  const Tensor& lv = val(loss.id);
  if (lv.size() != 1) {
    throw UsageError("backward requires a scalar loss, got " + lv.shape_str());
  }

  // Reachability from the loss through differentiable edges.
  std::vector<char> visited(nodes_.size(), 0);
  std::vector<int> stack{loss.id};
  visited[loss.id] = 1;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    for (int p : nodes_[id].parents) {
      if (!visited[p] && nodes_[p].requires_grad) {
        visited[p] = 1;
        stack.push_back(p);
      }
    }
  }

  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (visited[i]) {
      nodes_[i].grad = Tensor(nodes_[i].value.rows(), nodes_[i].value.cols());
    }
  }
  nodes_[loss.id].grad[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    if (visited[id] && nodes_[id].backprop) nodes_[id].backprop(*this, id);
  }

  Gradients grads;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].param_name.empty()) {
      if (visited[i]) {
        grads[nodes_[i].param_name] = nodes_[i].grad;
      } else {
        grads[nodes_[i].param_name] =
            Tensor(nodes_[i].value.rows(), nodes_[i].value.cols());
      }
    }
  }
  return grads;
}

}  // namespace otclab
