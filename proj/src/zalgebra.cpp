#include "mcf/zalgebra.hpp"

#include <sstream>
#include <stdexcept>

namespace mcf::zalg {

std::string to_string(const Integer& z) { return z.str(); }

// ---- IntMatrix ---------------------------------------------------------------

IntMatrix IntMatrix::identity(int n) {
  IntMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<long long>>& rows) {
  int r = int(rows.size());
  int c = r ? int(rows[0].size()) : 0;
  IntMatrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (int(rows[i].size()) != c) throw std::invalid_argument("ragged matrix rows");
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix t(c_, r_);
  for (int i = 0; i < r_; ++i)
    for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool IntMatrix::is_zero() const {
  for (const auto& x : a_)
    if (x != 0) return false;
  return true;
}

IntVec IntMatrix::column(int j) const {
  IntVec v(r_);
  for (int i = 0; i < r_; ++i) v[i] = (*this)(i, j);
  return v;
}

IntVec IntMatrix::apply(const IntVec& v) const {
  if (int(v.size()) != c_) throw std::invalid_argument("apply: size mismatch");
  IntVec out(r_);
  for (int i = 0; i < r_; ++i)
    for (int j = 0; j < c_; ++j)
      if (v[j] != 0) out[i] += (*this)(i, j) * v[j];
  return out;
}

Integer IntMatrix::determinant() const {
  if (r_ != c_) throw std::invalid_argument("determinant of non-square matrix");
  int n = r_;
  if (n == 0) return 1;
  IntMatrix m = *this;
  Integer sign = 1, prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      int p = -1;
      for (int i = k + 1; i < n; ++i)
        if (m(i, k) != 0) {
          p = i;
          break;
        }
      if (p < 0) return 0;
      m.swap_rows(k, p);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < r_; ++i) {
    os << (i ? ", [" : "[");
    for (int j = 0; j < c_; ++j) os << (j ? ", " : "") << (*this)(i, j);
    os << "]";
  }
  os << "]";
  return os.str();
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.c_ != b.r_) throw std::invalid_argument("matrix product shape mismatch");
  IntMatrix m(a.r_, b.c_);
  for (int i = 0; i < a.r_; ++i)
    for (int k = 0; k < a.c_; ++k) {
      const Integer& x = a(i, k);
      if (x == 0) continue;
      for (int j = 0; j < b.c_; ++j) m(i, j) += x * b(k, j);
    }
  return m;
}

IntMatrix operator+(const IntMatrix& a, const IntMatrix& b) {
  if (a.r_ != b.r_ || a.c_ != b.c_) throw std::invalid_argument("matrix sum shape mismatch");
  IntMatrix m = a;
  for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] += b.a_[i];
  return m;
}

IntMatrix operator-(const IntMatrix& a, const IntMatrix& b) {
  if (a.r_ != b.r_ || a.c_ != b.c_) throw std::invalid_argument("matrix difference shape mismatch");
  IntMatrix m = a;
  for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] -= b.a_[i];
  return m;
}

bool operator==(const IntMatrix& a, const IntMatrix& b) { return a.r_ == b.r_ && a.c_ == b.c_ && a.a_ == b.a_; }

void IntMatrix::swap_rows(int i, int j) {
  if (i == j) return;
  for (int k = 0; k < c_; ++k) std::swap((*this)(i, k), (*this)(j, k));
}
void IntMatrix::swap_cols(int i, int j) {
  if (i == j) return;
  for (int k = 0; k < r_; ++k) std::swap((*this)(k, i), (*this)(k, j));
}
void IntMatrix::add_row(int dst, int src, const Integer& c) {
  if (c == 0) return;
  for (int k = 0; k < c_; ++k) (*this)(dst, k) += c * (*this)(src, k);
}
void IntMatrix::add_col(int dst, int src, const Integer& c) {
  if (c == 0) return;
  for (int k = 0; k < r_; ++k) (*this)(k, dst) += c * (*this)(k, src);
}
void IntMatrix::negate_row(int i) {
  for (int k = 0; k < c_; ++k) (*this)(i, k) = -(*this)(i, k);
}
void IntMatrix::negate_col(int j) {
  for (int k = 0; k < r_; ++k) (*this)(k, j) = -(*this)(k, j);
}

// ---- Smith normal form -------------------------------------------------------

namespace {

struct Reducer {
  IntMatrix A, U, Ui, V, Vi;

  explicit Reducer(const IntMatrix& a)
      : A(a), U(IntMatrix::identity(a.rows())), Ui(IntMatrix::identity(a.rows())),
        V(IntMatrix::identity(a.cols())), Vi(IntMatrix::identity(a.cols())) {}

  void row_swap(int i, int j) {
    A.swap_rows(i, j);
    U.swap_cols(i, j);
    Ui.swap_rows(i, j);
  }
  void row_add(int dst, int src, const Integer& c) {
    A.add_row(dst, src, c);
    U.add_col(src, dst, -c);
    Ui.add_row(dst, src, c);
  }
  void row_neg(int i) {
    A.negate_row(i);
    U.negate_col(i);
    Ui.negate_row(i);
  }
  void col_swap(int i, int j) {
    A.swap_cols(i, j);
    V.swap_rows(i, j);
    Vi.swap_cols(i, j);
  }
  void col_add(int dst, int src, const Integer& c) {
    A.add_col(dst, src, c);
    V.add_row(src, dst, -c);
    Vi.add_col(dst, src, c);
  }

  void run() {
    int m = A.rows(), n = A.cols();
    for (int t = 0; t < std::min(m, n); ++t) {
      if (!move_min_pivot(t, t, m, t, n)) break;
      for (;;) {
        bool col_dirty = false, row_dirty = false;
        for (int i = t + 1; i < m; ++i)
          if (A(i, t) != 0) {
            Integer q = A(i, t) / A(t, t);
            row_add(i, t, -q);
            if (A(i, t) != 0) col_dirty = true;
          }
        if (col_dirty) {
          move_min_pivot(t, t, m, t, t + 1);
          continue;
        }
        for (int j = t + 1; j < n; ++j)
          if (A(t, j) != 0) {
            Integer q = A(t, j) / A(t, t);
            col_add(j, t, -q);
            if (A(t, j) != 0) row_dirty = true;
          }
        if (row_dirty) {
          move_min_pivot(t, t, t + 1, t, n);
          continue;
        }
        int bad = -1;
        for (int i = t + 1; i < m && bad < 0; ++i)
          for (int j = t + 1; j < n; ++j)
            if (A(i, j) % A(t, t) != 0) {
              bad = i;
              break;
            }
        if (bad < 0) break;
        row_add(t, bad, 1);
      }
      if (A(t, t) < 0) row_neg(t);
    }
  }

  // Moves the smallest nonzero |entry| of A[r0:r1, c0:c1] to (t,t).
  bool move_min_pivot(int t, int r0, int r1, int c0, int c1) {
    int bi = -1, bj = -1;
    Integer best;
    for (int i = r0; i < r1; ++i)
      for (int j = c0; j < c1; ++j) {
        if (A(i, j) == 0) continue;
        Integer v = abs(A(i, j));
        if (bi < 0 || v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (bi < 0) return false;
    row_swap(t, bi);
    col_swap(t, bj);
    return true;
  }
};

}  // namespace

SmithForm smith_normal_form(const IntMatrix& a) {
  Reducer r(a);
  r.run();
  SmithForm s{r.U, r.A, r.V, r.Ui, r.Vi, 0, {}};
  for (int t = 0; t < std::min(a.rows(), a.cols()); ++t) {
    if (s.D(t, t) == 0) break;
    s.factors.push_back(s.D(t, t));
    ++s.rank;
  }
  return s;
}

std::optional<IntVec> solve_integer(const IntMatrix& b, const IntVec& w) {
  SmithForm s = smith_normal_form(b);
  IntVec y = s.U_inv.apply(w);
  IntVec z(b.cols());
  for (int i = 0; i < b.rows(); ++i) {
    if (i < s.rank) {
      if (y[i] % s.factors[i] != 0) return std::nullopt;
      z[i] = y[i] / s.factors[i];
    } else if (y[i] != 0) {
      return std::nullopt;
    }
  }
  return s.V_inv.apply(z);
}

// ---- complexes ---------------------------------------------------------------

GradedComplex GradedComplex::zero(int direction, std::vector<std::vector<std::string>> gens) {
  GradedComplex c;
  c.direction = direction;
  c.generators = std::move(gens);
  for (int k = 0; k <= c.top(); ++k) c.differential.emplace_back(c.rank(k + direction), c.rank(k));
  return c;
}

void GradedComplex::check_shapes() const {
  if (direction != -1 && direction != 1) throw std::invalid_argument("complex direction must be -1 or +1");
  if (differential.size() != generators.size()) throw std::invalid_argument("one differential per degree required");
  for (int k = 0; k <= top(); ++k) {
    const auto& d = differential[k];
    if (d.cols() != rank(k) || d.rows() != rank(k + direction))
      throw std::invalid_argument("differential shape mismatch in degree " + std::to_string(k));
  }
}

SquareZeroReport check_square_zero(const GradedComplex& c) {
  c.check_shapes();
  SquareZeroReport r;
  for (int k = 0; k <= c.top(); ++k) {
    int k2 = k + c.direction;
    if (k2 < 0 || k2 > c.top()) continue;
    IntMatrix dd = c.differential[k2] * c.differential[k];
    for (int i = 0; i < dd.rows(); ++i)
      for (int j = 0; j < dd.cols(); ++j)
        if (dd(i, j) != 0) return {false, k, i, j};
  }
  return r;
}

namespace {

struct DegreeData {
  int n = 0;
  int r = 0;                 // rank of incoming differential
  IntVec factors;            // of incoming differential
  IntMatrix U;               // basis of C_k adapted to the image
  IntMatrix kernel_basis;    // n x (r + betti): U e_0..U e_{r-1} then free lifts
  int betti = 0;
};

DegreeData degree_data(const GradedComplex& c, int k) {
  DegreeData dd;
  dd.n = c.rank(k);
  int kin = k - c.direction;
  IntMatrix din = (kin >= 0 && kin <= c.top()) ? c.differential[kin] : IntMatrix(dd.n, 0);
  SmithForm s = smith_normal_form(din);
  dd.r = s.rank;
  dd.factors = s.factors;
  dd.U = s.U;
  IntMatrix dout = c.differential[k];
  IntMatrix B = dout * s.U;
  int rest = dd.n - dd.r;
  IntMatrix Bp(B.rows(), rest);
  for (int i = 0; i < B.rows(); ++i)
    for (int j = 0; j < rest; ++j) Bp(i, j) = B(i, dd.r + j);
  SmithForm sp = smith_normal_form(Bp);
  dd.betti = rest - sp.rank;
  dd.kernel_basis = IntMatrix(dd.n, dd.r + dd.betti);
  for (int j = 0; j < dd.r; ++j)
    for (int i = 0; i < dd.n; ++i) dd.kernel_basis(i, j) = s.U(i, j);
  for (int j = 0; j < dd.betti; ++j) {
    IntVec coeff(dd.n);
    for (int i = 0; i < rest; ++i) coeff[dd.r + i] = sp.V_inv(i, sp.rank + j);
    IntVec lift = s.U.apply(coeff);
    for (int i = 0; i < dd.n; ++i) dd.kernel_basis(i, dd.r + j) = lift[i];
  }
  return dd;
}

// Homology coordinates of a cycle: torsion part (mod factors > 1) then free part.
IntVec homology_coords(const DegreeData& dd, const IntVec& w) {
  IntVec out;
  if (dd.n == 0) return out;
  auto c = solve_integer(dd.kernel_basis, w);
  if (!c) throw std::runtime_error("homology_coords: vector is not a cycle");
  for (int i = 0; i < dd.r; ++i)
    if (dd.factors[i] > 1) {
      Integer v = (*c)[i] % dd.factors[i];
      if (v < 0) v += dd.factors[i];
      out.push_back(v);
    }
  for (int j = 0; j < dd.betti; ++j) out.push_back((*c)[dd.r + j]);
  return out;
}

std::vector<IntVec> generator_lifts(const DegreeData& dd) {
  std::vector<IntVec> lifts;
  for (int i = 0; i < dd.r; ++i)
    if (dd.factors[i] > 1) lifts.push_back(dd.kernel_basis.column(i));
  for (int j = 0; j < dd.betti; ++j) lifts.push_back(dd.kernel_basis.column(dd.r + j));
  return lifts;
}

IntMatrix block_or_zero(const GradedIntMap& m, int k, int rows, int cols) {
  if (k >= 0 && k < int(m.blocks.size())) {
    const IntMatrix& b = m.blocks[k];
    if (b.rows() != rows || b.cols() != cols)
      throw std::invalid_argument("graded map block " + std::to_string(k) + " has wrong shape");
    return b;
  }
  return IntMatrix(rows, cols);
}

}  // namespace

HomologyResult homology(const GradedComplex& c) {
  auto sq = check_square_zero(c);
  if (!sq.holds)
    throw std::runtime_error("homology: differential does not square to zero out of degree " +
                             std::to_string(sq.degree));
  HomologyResult h;
  h.direction = c.direction;
  for (int k = 0; k <= c.top(); ++k) {
    DegreeData dd = degree_data(c, k);
    DegreeHomology g;
    g.betti = dd.betti;
    for (const auto& f : dd.factors)
      if (f > 1) g.torsion.push_back(f);
    g.lifts = generator_lifts(dd);
    h.degrees.push_back(std::move(g));
  }
  return h;
}

std::vector<int> HomologyResult::betti() const {
  std::vector<int> b;
  for (const auto& d : degrees) b.push_back(d.betti);
  return b;
}

std::string HomologyResult::describe() const {
  std::ostringstream os;
  const char* sym = direction < 0 ? "H_" : "H^";
  for (std::size_t k = 0; k < degrees.size(); ++k) {
    const auto& d = degrees[k];
    os << (k ? ", " : "") << sym << k << "=";
    std::vector<std::string> parts;
    if (d.betti == 1) parts.push_back("Z");
    else if (d.betti > 1) parts.push_back("Z^" + std::to_string(d.betti));
    for (const auto& t : d.torsion) parts.push_back("Z/" + t.str());
    if (parts.empty()) os << "0";
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? " + " : "") << parts[i];
  }
  return os.str();
}

bool operator==(const HomologyResult& a, const HomologyResult& b) {
  std::size_t n = std::max(a.degrees.size(), b.degrees.size());
  for (std::size_t k = 0; k < n; ++k) {
    int ba = k < a.degrees.size() ? a.degrees[k].betti : 0;
    int bb = k < b.degrees.size() ? b.degrees[k].betti : 0;
    IntVec ta = k < a.degrees.size() ? a.degrees[k].torsion : IntVec{};
    IntVec tb = k < b.degrees.size() ? b.degrees[k].torsion : IntVec{};
    if (ba != bb || ta != tb) return false;
  }
  return true;
}

GradedComplex dualize(const GradedComplex& c) {
  c.check_shapes();
  GradedComplex d;
  d.direction = -c.direction;
  d.generators = c.generators;
  for (int k = 0; k <= c.top(); ++k) {
    int from = k + d.direction;  // the original differential entering degree k
    if (from >= 0 && from <= c.top()) d.differential.push_back(c.differential[from].transpose());
    else d.differential.emplace_back(0, c.rank(k));
  }
  return d;
}

// ---- graded maps -------------------------------------------------------------

GradedIntMap GradedIntMap::identity(const GradedComplex& c) {
  GradedIntMap m;
  for (int k = 0; k <= c.top(); ++k) m.blocks.push_back(IntMatrix::identity(c.rank(k)));
  return m;
}

GradedIntMap GradedIntMap::zero(const GradedComplex& src, const GradedComplex& tgt) {
  GradedIntMap m;
  for (int k = 0; k <= src.top(); ++k) m.blocks.emplace_back(tgt.rank(k), src.rank(k));
  return m;
}

GradedIntMap compose(const GradedIntMap& second, const GradedIntMap& first) {
  GradedIntMap m;
  m.degree_sign = first.degree_sign * second.degree_sign;
  m.degree_offset = second.degree_sign * first.degree_offset + second.degree_offset;
  for (std::size_t k = 0; k < first.blocks.size(); ++k) {
    int mid = first.target_degree(int(k));
    if (mid < 0 || mid >= int(second.blocks.size())) {
      m.blocks.emplace_back(0, first.blocks[k].cols());
      continue;
    }
    m.blocks.push_back(second.blocks[mid] * first.blocks[k]);
  }
  return m;
}

GradedIntMap subtract(const GradedIntMap& a, const GradedIntMap& b) {
  if (a.degree_sign != b.degree_sign || a.degree_offset != b.degree_offset || a.blocks.size() != b.blocks.size())
    throw std::invalid_argument("subtract: incompatible graded maps");
  GradedIntMap m = a;
  for (std::size_t k = 0; k < a.blocks.size(); ++k) m.blocks[k] = a.blocks[k] - b.blocks[k];
  return m;
}

ChainMapReport verify_chain_map(const GradedIntMap& m, const GradedComplex& src, const GradedComplex& tgt) {
  src.check_shapes();
  tgt.check_shapes();
  ChainMapReport rep;
  for (int k = 0; k <= src.top(); ++k) {
    int t = m.target_degree(k);
    int k2 = k + src.direction;
    if (m.target_degree(k2) != t + tgt.direction)
      throw std::invalid_argument("verify_chain_map: degree map incompatible with differentials");
    IntMatrix mk = block_or_zero(m, k, tgt.rank(t), src.rank(k));
    IntMatrix dt = (t >= 0 && t <= tgt.top()) ? tgt.differential[t] : IntMatrix(tgt.rank(t + tgt.direction), 0);
    IntMatrix lhs = dt * mk;
    IntMatrix mk2 = block_or_zero(m, k2, tgt.rank(t + tgt.direction), src.rank(k2));
    IntMatrix rhs = mk2 * src.differential[k];
    for (int i = 0; i < lhs.rows(); ++i)
      for (int j = 0; j < lhs.cols(); ++j)
        if (lhs(i, j) != rhs(i, j)) {
          rep.holds = false;
          rep.degree = k;
          rep.row = i;
          rep.col = j;
          std::ostringstream os;
          os << "chain map identity fails leaving source degree " << k << " at entry (" << i << "," << j
             << "): " << lhs(i, j) << " != " << rhs(i, j);
          rep.message = os.str();
          return rep;
        }
  }
  return rep;
}

HomologyMap induced_on_homology(const GradedIntMap& m, const GradedComplex& src, const GradedComplex& tgt) {
  auto r = verify_chain_map(m, src, tgt);
  if (!r.holds) throw std::runtime_error("induced_on_homology: " + r.message);
  HomologyMap hm;
  for (int k = 0; k <= src.top(); ++k) {
    DegreeData ds = degree_data(src, k);
    auto lifts = generator_lifts(ds);
    int t = m.target_degree(k);
    bool in_range = t >= 0 && t <= tgt.top();
    DegreeData dt = in_range ? degree_data(tgt, t) : DegreeData{};
    int trows = 0;
    if (in_range) {
      for (const auto& f : dt.factors)
        if (f > 1) ++trows;
      trows += dt.betti;
    }
    IntMatrix block(trows, int(lifts.size()));
    IntMatrix mk = block_or_zero(m, k, tgt.rank(t), src.rank(k));
    for (std::size_t j = 0; j < lifts.size() && in_range; ++j) {
      IntVec coords = homology_coords(dt, mk.apply(lifts[j]));
      for (int i = 0; i < trows; ++i) block(i, int(j)) = coords[i];
    }
    hm.blocks.push_back(block);
  }
  return hm;
}

bool equal_on_homology(const GradedIntMap& a, const GradedIntMap& b, const GradedComplex& src,
                       const GradedComplex& tgt) {
  auto ra = verify_chain_map(a, src, tgt);
  if (!ra.holds) throw std::runtime_error("equal_on_homology: first map: " + ra.message);
  auto rb = verify_chain_map(b, src, tgt);
  if (!rb.holds) throw std::runtime_error("equal_on_homology: second map: " + rb.message);
  HomologyMap d = induced_on_homology(subtract(a, b), src, tgt);
  for (const auto& blk : d.blocks)
    if (!blk.is_zero()) return false;
  return true;
}

}  // namespace mcf::zalg
