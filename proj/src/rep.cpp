#include "hoqt/rep.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

namespace hoqt {
namespace {

using int128 = __int128;

int128 gcd128(int128 a, int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Hook length of each cell, row-reading order. The hook counts the cell,
// the cells to its right, and the cells below it.
std::vector<int> hook_lengths(const YoungDiagram& mu) {
  int l = mu.length();
  std::vector<int> conj(mu.rows[0], 0);
  for (int r = 0; r < l; ++r)
    for (int c = 0; c < mu.rows[r]; ++c) ++conj[c];
  std::vector<int> hooks;
  for (int r = 0; r < l; ++r)
    for (int c = 0; c < mu.rows[r]; ++c)
      hooks.push_back((mu.rows[r] - c) + (conj[c] - r) - 1);
  return hooks;
}

void check_shape(const YoungDiagram& mu) {
  require(mu.valid(), "invalid shape " + mu.str());
  require(mu.boxes() <= 33, "shape too large for exact integer dimensions");
}

void check_perm(const Permutation& sigma) {
  std::vector<bool> seen(sigma.size(), false);
  for (int v : sigma) {
    require(v >= 0 && v < static_cast<int>(sigma.size()) && !seen[v],
            "not a permutation");
    seen[v] = true;
  }
}

// First-column hook lengths; removing a border strip of length t is a
// decrement of one entry by t that keeps the entries distinct, with sign
// read off from the number of entries jumped over.
std::int64_t strip_characters(std::vector<int> beta,
                              const std::vector<int>& parts, size_t idx) {
  if (idx == parts.size()) return 1;
  int t = parts[idx];
  std::int64_t total = 0;
  for (size_t i = 0; i < beta.size(); ++i) {
    int b = beta[i] - t;
    if (b < 0) continue;
    bool clash = false;
    int height = 0;
    for (size_t j = 0; j < beta.size(); ++j) {
      if (j == i) continue;
      if (beta[j] == b) clash = true;
      if (beta[j] > b && beta[j] < beta[i]) ++height;
    }
    if (clash) continue;
    std::vector<int> next = beta;
    next[i] = b;
    std::sort(next.begin(), next.end(), std::greater<int>());
    std::int64_t sub = strip_characters(std::move(next), parts, idx + 1);
    total += (height % 2 ? -sub : sub);
  }
  return total;
}

// Row index for each column index of the matrix of P_sigma.
std::vector<std::int64_t> perm_row_map(const Permutation& sigma,
                                       std::int64_t d, int k) {
  Permutation sinv = inverse(sigma);
  std::vector<std::int64_t> stride(k);
  stride[k - 1] = 1;
  for (int i = k - 2; i >= 0; --i) stride[i] = stride[i + 1] * d;
  std::int64_t dk = stride[0] * d;
  std::vector<std::int64_t> digits(k);
  std::vector<std::int64_t> rowmap(dk);
  for (std::int64_t c = 0; c < dk; ++c) {
    std::int64_t rest = c;
    for (int i = k - 1; i >= 0; --i) {
      digits[i] = rest % d;
      rest /= d;
    }
    std::int64_t row = 0;
    for (int i = 0; i < k; ++i) row += digits[sinv[i]] * stride[i];
    rowmap[c] = row;
  }
  return rowmap;
}

// Per-shape data for Young's orthogonal representation, cached because the
// matrix-unit builders evaluate it once per group element.
struct YorData {
  std::vector<StandardTableau> tableaux;
  std::map<std::vector<int>, int> index;
  std::vector<RMat> adjacent;  // images of the transpositions (i, i+1)
};

const YorData& yor_data(const YoungDiagram& mu) {
  static std::mutex guard;
  static std::map<std::vector<int>, std::unique_ptr<YorData>> cache;
  std::lock_guard<std::mutex> lock(guard);
  auto it = cache.find(mu.rows);
  if (it != cache.end()) return *it->second;

  auto data = std::make_unique<YorData>();
  data->tableaux = standard_tableaux(mu);
  int ds = static_cast<int>(data->tableaux.size());
  for (int t = 0; t < ds; ++t) data->index[data->tableaux[t].row_word()] = t;

  int k = mu.boxes();
  auto locate = [](const StandardTableau& tab, int value, int* r, int* c) {
    for (size_t rr = 0; rr < tab.cells.size(); ++rr)
      for (size_t cc = 0; cc < tab.cells[rr].size(); ++cc)
        if (tab.cells[rr][cc] == value) {
          *r = static_cast<int>(rr);
          *c = static_cast<int>(cc);
          return;
        }
    fail("value missing from tableau");
  };

  for (int i = 0; i + 1 < k; ++i) {
    RMat m = RMat::Zero(ds, ds);
    for (int t = 0; t < ds; ++t) {
      int r1, c1, r2, c2;
      locate(data->tableaux[t], i + 1, &r1, &c1);
      locate(data->tableaux[t], i + 2, &r2, &c2);
      double delta = static_cast<double>((c2 - r2) - (c1 - r1));
      m(t, t) = 1.0 / delta;
      if (r1 != r2 && c1 != c2) {
        StandardTableau swapped = data->tableaux[t];
        swapped.cells[r1][c1] = i + 2;
        swapped.cells[r2][c2] = i + 1;
        int t2 = data->index.at(swapped.row_word());
        m(t2, t) = std::sqrt(1.0 - 1.0 / (delta * delta));
      }
    }
    data->adjacent.push_back(std::move(m));
  }

  auto& slot = cache[mu.rows];
  slot = std::move(data);
  return *slot;
}

// Deterministic orthonormal basis of the range of a Hermitian projector:
// modified Gram-Schmidt over the columns with largest-residual pivoting and
// a re-orthogonalization pass. Picks standard basis vectors whenever the
// projector is diagonal.
Mat orthonormal_range_basis(const Mat& proj, std::int64_t rank) {
  Mat resid = proj;
  Mat basis(proj.rows(), rank);
  for (std::int64_t found = 0; found < rank; ++found) {
    std::int64_t best = 0;
    double best_norm = -1.0;
    for (std::int64_t j = 0; j < resid.cols(); ++j) {
      double n = resid.col(j).norm();
      if (n > best_norm + 1e-14) {
        best_norm = n;
        best = j;
      }
    }
    require(best_norm > 1e-7, "projector rank deficient");
    Vec q = resid.col(best) / best_norm;
    if (found > 0) {
      Vec overlap = basis.leftCols(found).adjoint() * q;
      q -= basis.leftCols(found) * overlap;
      q /= q.norm();
    }
    basis.col(found) = q;
    resid -= q * (q.adjoint() * resid);
  }
  require(resid.norm() < 1e-6 * std::sqrt(double(proj.rows())),
          "projector rank larger than expected");
  return basis;
}

Mat build_block_isometry(const std::vector<std::vector<Mat>>& units,
                         std::int64_t du) {
  std::int64_t ds = static_cast<std::int64_t>(units.size());
  std::int64_t dk = units[0][0].rows();
  Mat seed = orthonormal_range_basis(units[0][0], du);
  Mat w(dk, du * ds);
  for (std::int64_t u = 0; u < du; ++u) {
    w.col(u * ds + 0) = seed.col(u);
    for (std::int64_t t = 1; t < ds; ++t)
      w.col(u * ds + t) = units[t][0] * seed.col(u);
  }
  require((w.adjoint() * w - Mat::Identity(du * ds, du * ds)).norm() < 1e-9,
          "block basis failed to orthonormalize");
  return w;
}

}  // namespace

int YoungDiagram::boxes() const {
  int sum = 0;
  for (int r : rows) sum += r;
  return sum;
}

bool YoungDiagram::valid() const {
  if (rows.empty()) return false;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 1) return false;
    if (i > 0 && rows[i] > rows[i - 1]) return false;
  }
  return true;
}

std::string YoungDiagram::str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << rows[i];
  os << "]";
  return os.str();
}

std::vector<int> StandardTableau::row_word() const {
  std::vector<int> word;
  for (const auto& row : cells) word.insert(word.end(), row.begin(), row.end());
  return word;
}

std::vector<YoungDiagram> partitions(int k, int max_rows) {
  require(k >= 1, "partitions need at least one box");
  std::vector<YoungDiagram> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int rem, int maxpart) -> void {
    if (rem == 0) {
      out.push_back({cur});
      return;
    }
    if (max_rows > 0 && static_cast<int>(cur.size()) == max_rows) return;
    for (int p = std::min(maxpart, rem); p >= 1; --p) {
      cur.push_back(p);
      self(self, rem - p, p);
      cur.pop_back();
    }
  };
  rec(rec, k, k);
  return out;
}

std::int64_t dim_sym(const YoungDiagram& mu) {
  check_shape(mu);
  int k = mu.boxes();
  int128 num = 1, den = 1;
  auto reduce = [&] {
    int128 g = gcd128(num, den);
    num /= g;
    den /= g;
  };
  for (int i = 2; i <= k; ++i) {
    num *= i;
    reduce();
  }
  for (int h : hook_lengths(mu)) {
    den *= h;
    reduce();
  }
  require(den == 1, "hook quotient not integral");
  return static_cast<std::int64_t>(num);
}

std::int64_t dim_u(const YoungDiagram& mu, int d) {
  check_shape(mu);
  require(d >= 1, "dimension must be positive");
  if (mu.length() > d) return 0;
  auto hooks = hook_lengths(mu);
  int128 num = 1, den = 1;
  size_t cell = 0;
  for (int r = 0; r < mu.length(); ++r)
    for (int c = 0; c < mu.rows[r]; ++c) {
      num *= d + c - r;
      den *= hooks[cell++];
      int128 g = gcd128(num, den);
      num /= g;
      den /= g;
    }
  require(den == 1, "content quotient not integral");
  return static_cast<std::int64_t>(num);
}

std::int64_t character(const YoungDiagram& mu, const YoungDiagram& ct) {
  check_shape(mu);
  check_shape(ct);
  require(mu.boxes() == ct.boxes(),
          "character of " + mu.str() + " needs a class of the same size, got " +
              ct.str());
  int l = mu.length();
  std::vector<int> beta(l);
  for (int i = 0; i < l; ++i) beta[i] = mu.rows[i] + (l - 1 - i);
  return strip_characters(std::move(beta), ct.rows, 0);
}

std::vector<StandardTableau> standard_tableaux(const YoungDiagram& mu) {
  check_shape(mu);
  int k = mu.boxes();
  int l = mu.length();
  std::vector<StandardTableau> out;
  std::vector<std::vector<int>> grid(l);
  std::vector<int> count(l, 0);
  auto rec = [&](auto&& self, int value) -> void {
    if (value > k) {
      StandardTableau tab;
      tab.shape = mu;
      tab.cells = grid;
      out.push_back(std::move(tab));
      return;
    }
    for (int r = 0; r < l; ++r) {
      if (count[r] == mu.rows[r]) continue;
      if (r > 0 && count[r] >= count[r - 1]) continue;
      grid[r].push_back(value);
      ++count[r];
      self(self, value + 1);
      --count[r];
      grid[r].pop_back();
    }
  };
  rec(rec, 1);
  std::sort(out.begin(), out.end(),
            [](const StandardTableau& a, const StandardTableau& b) {
              return a.row_word() < b.row_word();
            });
  return out;
}

std::vector<Permutation> all_permutations(int k) {
  require(k >= 1, "group on at least one letter");
  Permutation p(k);
  std::iota(p.begin(), p.end(), 0);
  std::vector<Permutation> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

Permutation compose(const Permutation& a, const Permutation& b) {
  require(a.size() == b.size(), "composition size mismatch");
  Permutation out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[b[i]];
  return out;
}

Permutation inverse(const Permutation& a) {
  Permutation out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[a[i]] = static_cast<int>(i);
  return out;
}

YoungDiagram cycle_type(const Permutation& sigma) {
  check_perm(sigma);
  std::vector<bool> seen(sigma.size(), false);
  std::vector<int> lengths;
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    size_t j = i;
    while (!seen[j]) {
      seen[j] = true;
      j = sigma[j];
      ++len;
    }
    lengths.push_back(len);
  }
  std::sort(lengths.begin(), lengths.end(), std::greater<int>());
  return {lengths};
}

std::vector<Space> copy_spaces(std::int64_t d, int k,
                               const std::string& prefix) {
  std::vector<Space> spaces;
  for (int i = 1; i <= k; ++i)
    spaces.push_back({prefix + std::to_string(i), d});
  return spaces;
}

LabeledOperator perm_operator(const Permutation& sigma, std::int64_t d,
                              int k) {
  require(static_cast<int>(sigma.size()) == k, "permutation size mismatch");
  check_perm(sigma);
  auto rowmap = perm_row_map(sigma, d, k);
  std::int64_t dk = static_cast<std::int64_t>(rowmap.size());
  Mat p = Mat::Zero(dk, dk);
  for (std::int64_t c = 0; c < dk; ++c) p(rowmap[c], c) = 1.0;
  return LabeledOperator::square(copy_spaces(d, k), std::move(p));
}

RMat young_orthogonal(const YoungDiagram& mu, const Permutation& sigma) {
  check_shape(mu);
  require(static_cast<int>(sigma.size()) == mu.boxes(),
          "permutation does not match shape size");
  check_perm(sigma);
  const YorData& yor = yor_data(mu);
  int ds = static_cast<int>(yor.tableaux.size());

  // Bubble the one-line word to the identity; each recorded swap is a right
  // factor, so the image is the product of the adjacent images in reverse.
  Permutation p = sigma;
  std::vector<int> swaps;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < p.size(); ++i)
      if (p[i] > p[i + 1]) {
        std::swap(p[i], p[i + 1]);
        swaps.push_back(static_cast<int>(i));
        changed = true;
      }
  }
  RMat rho = RMat::Identity(ds, ds);
  for (auto it = swaps.rbegin(); it != swaps.rend(); ++it)
    rho = rho * yor.adjacent[*it];
  return rho;
}

MatrixUnitSet matrix_units(const YoungDiagram& mu, std::int64_t d, int k) {
  check_shape(mu);
  require(mu.boxes() == k, "shape size does not match copy count");
  require(mu.length() <= d, "shape has more rows than the local dimension");
  const YorData& yor = yor_data(mu);
  int ds = static_cast<int>(yor.tableaux.size());
  std::int64_t dk = ipow(d, k);

  MatrixUnitSet set;
  set.shape = mu;
  set.tableaux = yor.tableaux;
  set.units.assign(ds, std::vector<Mat>(ds, Mat::Zero(dk, dk)));

  auto group = all_permutations(k);
  double scale = static_cast<double>(ds) / static_cast<double>(group.size());
  for (const auto& sigma : group) {
    RMat rho = young_orthogonal(mu, sigma);
    auto rowmap = perm_row_map(sigma, d, k);
    for (int s = 0; s < ds; ++s)
      for (int t = 0; t < ds; ++t) {
        double coeff = scale * rho(s, t);
        if (coeff == 0.0) continue;
        Mat& e = set.units[s][t];
        for (std::int64_t c = 0; c < dk; ++c) e(rowmap[c], c) += coeff;
      }
  }
  return set;
}

LabeledOperator isotypic_projector(const YoungDiagram& mu, std::int64_t d,
                                   int k) {
  check_shape(mu);
  require(mu.boxes() == k, "shape size does not match copy count");
  std::int64_t dk = ipow(d, k);
  auto group = all_permutations(k);

  // Integer-weight accumulation first, one scaling at the end, so that the
  // character cancellations for shapes with too many rows are exact.
  std::map<std::vector<int>, std::int64_t> chi;
  RMat acc = RMat::Zero(dk, dk);
  for (const auto& sigma : group) {
    auto ct = cycle_type(sigma);
    auto it = chi.find(ct.rows);
    if (it == chi.end()) it = chi.emplace(ct.rows, character(mu, ct)).first;
    std::int64_t w = it->second;
    if (w == 0) continue;
    auto rowmap = perm_row_map(sigma, d, k);
    for (std::int64_t c = 0; c < dk; ++c)
      acc(rowmap[c], c) += static_cast<double>(w);
  }
  double scale = static_cast<double>(dim_sym(mu)) /
                 static_cast<double>(group.size());
  Mat pi = (scale * acc).cast<cplx>();
  return LabeledOperator::square(copy_spaces(d, k), std::move(pi));
}

LabeledOperator schur_block_isometry(const YoungDiagram& mu, std::int64_t d,
                                     int k) {
  auto set = matrix_units(mu, d, k);
  std::int64_t du = dim_u(mu, static_cast<int>(d));
  Mat w = build_block_isometry(set.units, du);
  std::vector<Space> cols{{"u", du},
                          {"s", static_cast<std::int64_t>(set.tableaux.size())}};
  return LabeledOperator(copy_spaces(d, k), std::move(cols), std::move(w));
}

const SchurBlock& SchurData::block(const YoungDiagram& mu) const {
  for (const auto& blk : blocks)
    if (blk.shape == mu) return blk;
  fail("no block for shape " + mu.str());
}

const SchurData& schur_data(std::int64_t d, int k) {
  static std::mutex guard;
  static std::map<std::pair<std::int64_t, int>, std::unique_ptr<SchurData>>
      cache;
  std::lock_guard<std::mutex> lock(guard);
  auto key = std::make_pair(d, k);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto data = std::make_unique<SchurData>();
  data->d = d;
  data->k = k;
  for (const auto& mu : partitions(k, static_cast<int>(std::min<std::int64_t>(
                                          d, k)))) {
    SchurBlock blk;
    blk.shape = mu;
    blk.du = dim_u(mu, static_cast<int>(d));
    blk.ds = dim_sym(mu);
    auto set = matrix_units(mu, d, k);
    blk.units = std::move(set.units);
    std::int64_t dk = blk.units[0][0].rows();
    blk.projector = Mat::Zero(dk, dk);
    for (std::int64_t t = 0; t < blk.ds; ++t)
      blk.projector += blk.units[t][t];
    blk.isometry = build_block_isometry(blk.units, blk.du);
    data->blocks.push_back(std::move(blk));
  }
  auto& slot = cache[key];
  slot = std::move(data);
  return *slot;
}

LabeledOperator twirl(const LabeledOperator& rho, std::int64_t d, int k) {
  require(rho.square_aligned(), "twirl needs a square-aligned operator");
  std::int64_t dk = ipow(d, k);
  require(rho.row_dim() == dk, "operator dimension is not d^k");
  const SchurData& data = schur_data(d, k);
  Mat out = Mat::Zero(dk, dk);
  for (const auto& blk : data.blocks) {
    Mat inblock = blk.isometry.adjoint() * rho.mat() * blk.isometry;
    Mat reduced = Mat::Zero(blk.ds, blk.ds);
    for (std::int64_t u = 0; u < blk.du; ++u)
      reduced += inblock.block(u * blk.ds, u * blk.ds, blk.ds, blk.ds);
    Mat replaced = Mat::Zero(blk.du * blk.ds, blk.du * blk.ds);
    for (std::int64_t u = 0; u < blk.du; ++u)
      replaced.block(u * blk.ds, u * blk.ds, blk.ds, blk.ds) =
          reduced / static_cast<double>(blk.du);
    out += blk.isometry * replaced * blk.isometry.adjoint();
  }
  return LabeledOperator(rho.rows(), rho.cols(), std::move(out));
}

double verify_isometry_decomposition(const Mat& v, int k,
                                     std::map<YoungDiagram, Mat>* blocks) {
  std::int64_t d = v.cols(), bigd = v.rows();
  require(d >= 1 && bigd >= d, "expected a tall matrix");
  require((v.adjoint() * v - Mat::Identity(d, d)).norm() < kTolNumeric,
          "input is not an isometry");
  Mat vk = tensor_power(v, k);
  const SchurData& low = schur_data(d, k);
  const SchurData& high = schur_data(bigd, k);
  double residual = 0.0;
  for (const auto& blk : low.blocks) {
    const SchurBlock& top = high.block(blk.shape);
    Mat b = top.isometry.adjoint() * vk * blk.isometry;
    std::int64_t ds = blk.ds;
    Mat vmu = Mat::Zero(top.du, blk.du);
    for (std::int64_t a = 0; a < top.du; ++a)
      for (std::int64_t c = 0; c < blk.du; ++c) {
        cplx sum = 0.0;
        for (std::int64_t s = 0; s < ds; ++s) sum += b(a * ds + s, c * ds + s);
        vmu(a, c) = sum / static_cast<double>(ds);
      }
    Mat expect = Mat::Zero(b.rows(), b.cols());
    for (std::int64_t a = 0; a < top.du; ++a)
      for (std::int64_t c = 0; c < blk.du; ++c)
        expect.block(a * ds, c * ds, ds, ds) =
            vmu(a, c) * Mat::Identity(ds, ds);
    residual = std::max(residual, (b - expect).norm());
    residual = std::max(residual, (vk * blk.isometry - top.isometry * b).norm());
    residual = std::max(
        residual,
        (vmu.adjoint() * vmu - Mat::Identity(blk.du, blk.du)).norm());
    if (blocks) (*blocks)[blk.shape] = vmu;
  }
  return residual;
}

std::pair<double, double> dim_recursion_check(int d, int D, int k) {
  require(k >= 2, "recursion compares k against k-1");
  require(d >= 1 && D >= 1, "dimensions must be positive");
  double lhs = 0.0;
  for (const auto& mu : partitions(k))
    lhs += static_cast<double>(dim_u(mu, d)) * static_cast<double>(dim_u(mu, D));
  double tail = 0.0;
  for (const auto& alpha : partitions(k - 1))
    tail += static_cast<double>(dim_u(alpha, d)) *
            static_cast<double>(dim_u(alpha, D));
  double rhs = static_cast<double>(d * D + k - 1) * tail / static_cast<double>(k);
  return {lhs, rhs};
}

}  // namespace hoqt
