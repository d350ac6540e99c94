// Assembly of task programs in sandwich form, their expansion to explicit
// rows, the link-product ground truth used for verification, and JSON
// serialization.
//
// For one resource isometry V the success-branch condition composes the
// comb variable with |V>><<V| on every slot and, for tasks that probe
// through the resource, with |V>><<V| linking a d-dimensional reference to
// the probed leg. Under the link product
//   result[(a,b),(a',b')] = sum_{s,s''} X[(a,s),(a',s'')] Y[(s,b),(s'',b')]
// each contracted leg contributes the conjugate of the corresponding ket
// factor to a sandwich vector, so the whole condition collapses to
//   W(V)^dag X W(V) = p B(V),
// with W(V) columns indexed by (reference, kept) pairs. Every equality is
// additionally scaled by d^{-k} (w by d^{-k/2}) so the W factors have unit
// columns and the Gram blocks W_i^dag W_j equal Q_ij (x) 1_kept with
// Q_ij = u_i^dag u_j.

#include "hoqt/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace hoqt {

namespace {

// Which leg, if any, is linked to the d-dimensional reference space.
enum class ProbeLeg { kNone, kGlobalIn, kGlobalOut };

struct TaskShape {
  SlotSignature sig;
  int n_required = 1;
  ProbeLeg probe = ProbeLeg::kNone;
  std::int64_t slice = 1;
  std::int64_t kept = 1;
};

TaskShape task_shape(SdpTask task, std::int64_t d, std::int64_t D, int k) {
  TaskShape ts;
  ts.sig.slots.assign(static_cast<std::size_t>(k), {d, D});
  switch (task) {
    case SdpTask::kInversion:
      ts.sig.dim_p = D;
      ts.sig.dim_f = d;
      ts.n_required = k + 1;
      ts.probe = ProbeLeg::kGlobalIn;
      ts.slice = d;
      ts.kept = d;
      break;
    case SdpTask::kPseudoConjugation:
      ts.sig.dim_p = d;
      ts.sig.dim_f = D;
      ts.n_required = k + 1;
      ts.probe = ProbeLeg::kGlobalOut;
      ts.slice = d;
      ts.kept = d;
      break;
    case SdpTask::kConjugation:
      ts.sig.dim_p = d;
      ts.sig.dim_f = D;
      ts.n_required = k;
      ts.probe = ProbeLeg::kNone;
      ts.slice = 1;
      ts.kept = d * D;
      break;
    case SdpTask::kTransposition:
      ts.sig.dim_p = D;
      ts.sig.dim_f = d;
      ts.n_required = k;
      ts.probe = ProbeLeg::kNone;
      ts.slice = 1;
      ts.kept = D * d;
      break;
    case SdpTask::kSuccessOrDraw:
      ts.sig.dim_p = D;
      ts.sig.dim_f = D;
      ts.n_required = k + 1;
      ts.probe = ProbeLeg::kGlobalIn;
      ts.slice = d;
      ts.kept = D;
      break;
  }
  return ts;
}

Vec kron_vec(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a[i] * b;
  }
  return out;
}

// Natural embedding of C^d into C^D padding with zero rows.
Mat embedding_matrix(std::int64_t d, std::int64_t D) {
  Mat e = Mat::Zero(D, d);
  e.topLeftCorner(d, d).setIdentity();
  return e;
}

// Unnormalized dual ket |V>> as a flat vector, input index major.
Vec dual_ket_vec(const Mat& v) {
  const LabeledOperator k = dual_ket(v, "a", "b");
  return k.mat().col(0);
}

// Sandwich factors for one resource isometry: w has one column per
// (reference, kept) pair in reference-major order, u keeps only the
// contracted legs. Both carry the d^{-k/2} scale.
void sandwich_factors(const TaskShape& ts, std::int64_t d, const Mat& v,
                      Mat* w, Mat* u) {
  const int k = ts.sig.k();
  const Vec slot_factor = dual_ket_vec(v).conjugate();
  Vec slots = Vec::Ones(1);
  for (int i = 0; i < k; ++i) slots = kron_vec(slots, slot_factor);
  slots *= std::pow(static_cast<double>(d), -0.5 * k);

  const std::int64_t dim = ts.sig.total_dim();
  const std::int64_t m = ts.slice * ts.kept;
  w->resize(dim, m);
  // Kept legs enumerate (P, F) in that order when both are kept; the
  // composite kept index is then x = x_p * dim_f + x_f.
  for (std::int64_t a = 0; a < ts.slice; ++a) {
    for (std::int64_t x = 0; x < ts.kept; ++x) {
      Vec head;  // factor on P
      Vec tail;  // factor on F
      if (ts.probe == ProbeLeg::kGlobalIn) {
        head = v.col(a).conjugate();
        tail = Vec::Unit(ts.sig.dim_f, x);
      } else if (ts.probe == ProbeLeg::kGlobalOut) {
        head = Vec::Unit(ts.sig.dim_p, x);
        tail = v.col(a).conjugate();
      } else {
        head = Vec::Unit(ts.sig.dim_p, x / ts.sig.dim_f);
        tail = Vec::Unit(ts.sig.dim_f, x % ts.sig.dim_f);
      }
      w->col(a * ts.kept + x) = kron_vec(kron_vec(head, slots), tail);
    }
  }

  // Contracted factors only, same leg order.
  if (ts.probe == ProbeLeg::kGlobalIn) {
    u->resize(ts.sig.dim_p * slots.size(), ts.slice);
    for (std::int64_t a = 0; a < ts.slice; ++a) {
      u->col(a) = kron_vec(v.col(a).conjugate(), slots);
    }
  } else if (ts.probe == ProbeLeg::kGlobalOut) {
    u->resize(slots.size() * ts.sig.dim_f, ts.slice);
    for (std::int64_t a = 0; a < ts.slice; ++a) {
      u->col(a) = kron_vec(slots, v.col(a).conjugate());
    }
  } else {
    u->resize(slots.size(), 1);
    u->col(0) = slots;
  }
}

// Physical target operator B(V) on (reference, kept), unscaled.
Mat task_target(SdpTask task, std::int64_t d, std::int64_t D, const Mat& v,
                int block) {
  const Mat eye = Mat::Identity(d, d);
  switch (task) {
    case SdpTask::kInversion:
      return dual_ket(eye, "r", "f").outer().mat();
    case SdpTask::kPseudoConjugation:
      return dual_ket(eye, "r", "p").outer().mat();
    case SdpTask::kConjugation:
      return dual_ket(v.conjugate(), "p", "f").outer().mat();
    case SdpTask::kTransposition:
      return dual_ket(v.transpose(), "p", "f").outer().mat();
    case SdpTask::kSuccessOrDraw:
      if (block == 0) {
        return dual_ket(embedding_matrix(d, D), "r", "f").outer().mat();
      }
      return dual_ket(v, "r", "f").outer().mat();
  }
  fail("task_target: unknown task");
}

}  // namespace

SdpProblem build_task_sdp(SdpTask task, std::int64_t d, std::int64_t D, int k,
                          CombClass comb, const IsometrySpanBasis& basis) {
  require(d >= 1 && D >= d, "build_task_sdp: need 1 <= d <= D");
  require(k >= 1, "build_task_sdp: need k >= 1");
  const TaskShape ts = task_shape(task, d, D, k);
  require(basis.d == d && basis.D == D,
          "build_task_sdp: basis dimensions do not match the task");
  require(basis.n == ts.n_required,
          "build_task_sdp: basis tensor power " + std::to_string(basis.n) +
              " does not match required " + std::to_string(ts.n_required));
  require(basis.rank() > 0, "build_task_sdp: empty basis");

  SdpProblem prob;
  prob.task = task;
  prob.d = d;
  prob.D = D;
  prob.k = k;
  prob.comb = comb;
  prob.signature = ts.sig;
  prob.has_comb = true;
  prob.structured = true;
  prob.basis = basis;

  const std::int64_t dim = ts.sig.total_dim();
  prob.blocks = {{"S", dim}, {"F", dim}};

  TaskRows& rows = prob.task_rows;
  rows.slice = ts.slice;
  rows.kept = ts.kept;
  const double scale = std::pow(static_cast<double>(d), -k);

  const int n_fam = task == SdpTask::kSuccessOrDraw ? 2 : 1;
  rows.families.resize(n_fam);
  for (int f = 0; f < n_fam; ++f) {
    rows.families[f].block = f;
  }

  for (const Mat& v : basis.isometries) {
    Mat w, u;
    sandwich_factors(ts, d, v, &w, &u);
    rows.w.push_back(std::move(w));
    rows.u.push_back(std::move(u));
    if (task == SdpTask::kSuccessOrDraw) {
      // Success: W^dag S W - p B_embed = 0. Draw: W^dag F W + p B_v = B_v.
      rows.families[0].p_coeff.push_back(-scale *
                                         task_target(task, d, D, v, 0));
      rows.families[0].rhs.push_back(Mat::Zero(ts.slice * ts.kept,
                                               ts.slice * ts.kept));
      const Mat bv = scale * task_target(task, d, D, v, 1);
      rows.families[1].p_coeff.push_back(bv);
      rows.families[1].rhs.push_back(bv);
    } else {
      rows.families[0].p_coeff.push_back(-scale *
                                         task_target(task, d, D, v, 0));
      rows.families[0].rhs.push_back(Mat::Zero(ts.slice * ts.kept,
                                               ts.slice * ts.kept));
    }
  }
  return prob;
}

SdpProblem make_generic_sdp(std::vector<PsdBlockSpec> blocks,
                            std::vector<GenericRow> rows) {
  SdpProblem prob;
  prob.structured = false;
  prob.has_comb = false;
  prob.blocks = std::move(blocks);
  for (const auto& r : rows) {
    require(r.a.size() == prob.blocks.size(),
            "make_generic_sdp: row block count mismatch");
    for (std::size_t b = 0; b < r.a.size(); ++b) {
      if (r.a[b].size() == 0) continue;
      require(r.a[b].rows() == prob.blocks[b].dim &&
                  r.a[b].cols() == prob.blocks[b].dim,
              "make_generic_sdp: row coefficient shape mismatch");
    }
  }
  prob.rows = std::move(rows);
  return prob;
}

std::vector<GenericRow> expand_rows(const SdpProblem& prob) {
  require(prob.structured, "expand_rows: problem has no structured rows");
  const TaskRows& tr = prob.task_rows;
  const std::int64_t m = tr.slice * tr.kept;
  std::vector<GenericRow> out;
  for (const auto& fam : tr.families) {
    for (std::size_t i = 0; i < tr.w.size(); ++i) {
      for (std::int64_t r = 0; r < m; ++r) {
        for (std::int64_t c = 0; c < m; ++c) {
          GenericRow row;
          row.a.resize(prob.blocks.size());
          row.a[static_cast<std::size_t>(fam.block)] =
              tr.w[i].col(r) * tr.w[i].col(c).adjoint();
          row.p_coeff = fam.p_coeff[i](r, c);
          row.rhs = fam.rhs[i](r, c);
          out.push_back(std::move(row));
        }
      }
    }
  }
  return out;
}

SdpProblem scale_equalities(SdpProblem prob, double factor) {
  require(factor > 0, "scale_equalities: factor must be positive");
  const double root = std::sqrt(factor);
  if (prob.structured) {
    for (auto& w : prob.task_rows.w) w *= root;
    for (auto& u : prob.task_rows.u) u *= root;
    for (auto& fam : prob.task_rows.families) {
      for (auto& p : fam.p_coeff) p *= factor;
      for (auto& r : fam.rhs) r *= factor;
    }
  }
  for (auto& row : prob.rows) {
    for (auto& a : row.a) a *= factor;
    row.p_coeff *= factor;
    row.rhs *= factor;
  }
  return prob;
}

Mat task_constraint_lhs(const SdpProblem& prob, const Mat& v,
                        const Mat& block_value, int block) {
  require(prob.structured, "task_constraint_lhs: structured problems only");
  require(block >= 0 && block < static_cast<int>(prob.blocks.size()),
          "task_constraint_lhs: block out of range");
  const SlotSignature& sig = prob.signature;
  require(block_value.rows() == sig.total_dim() &&
              block_value.cols() == sig.total_dim(),
          "task_constraint_lhs: block shape mismatch");

  std::vector<std::string> ins = {"P"};
  std::vector<std::string> outs;
  for (int i = 1; i <= sig.k(); ++i) {
    ins.push_back("O" + std::to_string(i));
    outs.push_back("I" + std::to_string(i));
  }
  outs.push_back("F");
  ChoiOperator net(LabeledOperator::square(sig.spaces(), block_value), ins,
                   outs);

  ChoiOperator acc = net;
  for (int i = 1; i <= sig.k(); ++i) {
    acc = link_product(
        acc, choi_of_isometry(v, "I" + std::to_string(i),
                              "O" + std::to_string(i)));
  }

  const TaskShape ts = task_shape(prob.task, prob.d, prob.D, prob.k);
  std::vector<std::string> order;
  if (ts.probe == ProbeLeg::kGlobalIn) {
    acc = link_product(choi_of_isometry(v, "R", "P"), acc);
    order = {"R", "F"};
  } else if (ts.probe == ProbeLeg::kGlobalOut) {
    acc = link_product(choi_of_isometry(v, "R", "F"), acc);
    order = {"R", "P"};
  } else {
    order = {"P", "F"};
  }
  return permute_systems(acc.op, order).mat();
}

Mat task_constraint_target(const SdpProblem& prob, const Mat& v, int block,
                           double p) {
  require(prob.structured, "task_constraint_target: structured problems only");
  const Mat b = task_target(prob.task, prob.d, prob.D, v, block);
  if (prob.task == SdpTask::kSuccessOrDraw && block == 1) {
    return (1.0 - p) * b;
  }
  require(block == 0, "task_constraint_target: block out of range");
  return p * b;
}

// ---------------------------------------------------------------------------
// JSON.

namespace {

const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    unsigned int word = static_cast<unsigned int>(data[i]) << 16;
    if (i + 1 < len) word |= static_cast<unsigned int>(data[i + 1]) << 8;
    if (i + 2 < len) word |= static_cast<unsigned int>(data[i + 2]);
    out.push_back(kB64Alphabet[(word >> 18) & 63]);
    out.push_back(kB64Alphabet[(word >> 12) & 63]);
    out.push_back(i + 1 < len ? kB64Alphabet[(word >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? kB64Alphabet[word & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  std::vector<int> lut(256, -1);
  for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kB64Alphabet[i])] = i;
  std::vector<unsigned char> out;
  unsigned int word = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = lut[static_cast<unsigned char>(c)];
    require(v >= 0, "base64_decode: invalid character");
    word = (word << 6) | static_cast<unsigned int>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((word >> bits) & 0xff));
    }
  }
  return out;
}

// Column-major doubles, re/im interleaved, little endian.
std::string encode_mat(const Mat& m) {
  std::vector<double> raw(static_cast<std::size_t>(m.size()) * 2);
  for (Eigen::Index c = 0, t = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r, ++t) {
      raw[2 * static_cast<std::size_t>(t)] = m(r, c).real();
      raw[2 * static_cast<std::size_t>(t) + 1] = m(r, c).imag();
    }
  }
  return base64_encode(reinterpret_cast<const unsigned char*>(raw.data()),
                       raw.size() * sizeof(double));
}

Mat decode_mat(const std::string& text, std::int64_t rows, std::int64_t cols) {
  const auto bytes = base64_decode(text);
  require(bytes.size() ==
              static_cast<std::size_t>(rows) * cols * 2 * sizeof(double),
          "decode_mat: payload size mismatch");
  Mat m(rows, cols);
  const double* raw = reinterpret_cast<const double*>(bytes.data());
  for (std::int64_t c = 0, t = 0; c < cols; ++c) {
    for (std::int64_t r = 0; r < rows; ++r, ++t) {
      m(r, c) = cplx(raw[2 * t], raw[2 * t + 1]);
    }
  }
  return m;
}

SdpTask task_from_name(const std::string& name) {
  for (SdpTask t : {SdpTask::kInversion, SdpTask::kPseudoConjugation,
                    SdpTask::kConjugation, SdpTask::kTransposition,
                    SdpTask::kSuccessOrDraw}) {
    if (name == sdp_task_name(t)) return t;
  }
  fail("task_from_name: unknown task '" + name + "'");
}

CombClass comb_from_name(const std::string& name) {
  for (CombClass c :
       {CombClass::kParallel, CombClass::kSequential, CombClass::kGeneral}) {
    if (name == comb_class_name(c)) return c;
  }
  fail("comb_from_name: unknown comb class '" + name + "'");
}

}  // namespace

std::string problem_to_json(const SdpProblem& prob) {
  nlohmann::json j;
  j["schema"] = 1;
  j["kind"] = prob.structured ? "task" : "generic";
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : prob.blocks) {
    blocks.push_back({{"name", b.name}, {"dim", b.dim}});
  }
  j["blocks"] = blocks;
  if (prob.structured) {
    j["task"] = sdp_task_name(prob.task);
    j["comb"] = comb_class_name(prob.comb);
    j["d"] = prob.d;
    j["D"] = prob.D;
    j["k"] = prob.k;
    nlohmann::json basis;
    basis["d"] = prob.basis.d;
    basis["D"] = prob.basis.D;
    basis["n"] = prob.basis.n;
    basis["seed"] = prob.basis.seed;
    basis["saturated"] = prob.basis.saturated;
    basis["gram_min_eig"] = prob.basis.gram_min_eig;
    nlohmann::json mats = nlohmann::json::array();
    for (const Mat& v : prob.basis.isometries) {
      mats.push_back({{"rows", v.rows()},
                      {"cols", v.cols()},
                      {"data", encode_mat(v)}});
    }
    basis["isometries"] = mats;
    j["basis"] = basis;
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : prob.rows) {
      nlohmann::json jr;
      nlohmann::json coeffs = nlohmann::json::array();
      for (std::size_t b = 0; b < row.a.size(); ++b) {
        if (row.a[b].size() == 0) continue;
        nlohmann::json triplets = nlohmann::json::array();
        for (Eigen::Index c = 0; c < row.a[b].cols(); ++c) {
          for (Eigen::Index r = 0; r < row.a[b].rows(); ++r) {
            const cplx val = row.a[b](r, c);
            if (val == cplx(0.0, 0.0)) continue;
            triplets.push_back({r, c, val.real(), val.imag()});
          }
        }
        coeffs.push_back({{"block", b}, {"triplets", triplets}});
      }
      jr["a"] = coeffs;
      jr["p_coeff"] = {row.p_coeff.real(), row.p_coeff.imag()};
      jr["rhs"] = {row.rhs.real(), row.rhs.imag()};
      rows.push_back(jr);
    }
    j["rows"] = rows;
  }
  return j.dump(2);
}

SdpProblem problem_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  require(j.at("schema").get<int>() == 1,
          "problem_from_json: unsupported schema");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "task") {
    const auto& jb = j.at("basis");
    IsometrySpanBasis basis;
    basis.d = jb.at("d").get<std::int64_t>();
    basis.D = jb.at("D").get<std::int64_t>();
    basis.n = jb.at("n").get<int>();
    basis.seed = jb.at("seed").get<std::uint64_t>();
    basis.saturated = jb.at("saturated").get<bool>();
    basis.gram_min_eig = jb.at("gram_min_eig").get<double>();
    for (const auto& jm : jb.at("isometries")) {
      basis.isometries.push_back(decode_mat(jm.at("data").get<std::string>(),
                                            jm.at("rows").get<std::int64_t>(),
                                            jm.at("cols").get<std::int64_t>()));
    }
    return build_task_sdp(task_from_name(j.at("task").get<std::string>()),
                          j.at("d").get<std::int64_t>(),
                          j.at("D").get<std::int64_t>(), j.at("k").get<int>(),
                          comb_from_name(j.at("comb").get<std::string>()),
                          basis);
  }
  require(kind == "generic", "problem_from_json: unknown kind '" + kind + "'");
  std::vector<PsdBlockSpec> blocks;
  for (const auto& b : j.at("blocks")) {
    blocks.push_back({b.at("name").get<std::string>(),
                      b.at("dim").get<std::int64_t>()});
  }
  std::vector<GenericRow> rows;
  for (const auto& jr : j.at("rows")) {
    GenericRow row;
    row.a.resize(blocks.size());
    for (const auto& coeff : jr.at("a")) {
      const std::size_t b = coeff.at("block").get<std::size_t>();
      require(b < blocks.size(), "problem_from_json: block index range");
      Mat a = Mat::Zero(blocks[b].dim, blocks[b].dim);
      for (const auto& t : coeff.at("triplets")) {
        a(t.at(0).get<Eigen::Index>(), t.at(1).get<Eigen::Index>()) =
            cplx(t.at(2).get<double>(), t.at(3).get<double>());
      }
      row.a[b] = std::move(a);
    }
    row.p_coeff = cplx(jr.at("p_coeff").at(0).get<double>(),
                       jr.at("p_coeff").at(1).get<double>());
    row.rhs = cplx(jr.at("rhs").at(0).get<double>(),
                   jr.at("rhs").at(1).get<double>());
    rows.push_back(std::move(row));
  }
  return make_generic_sdp(std::move(blocks), std::move(rows));
}

std::string solution_to_json(const SdpSolution& sol) {
  nlohmann::json j;
  j["schema"] = 1;
  j["p"] = sol.p;
  nlohmann::json blocks = nlohmann::json::array();
  for (const Mat& b : sol.block_values) {
    blocks.push_back(
        {{"rows", b.rows()}, {"cols", b.cols()}, {"data", encode_mat(b)}});
  }
  j["blocks"] = blocks;
  j["primal_residual"] = sol.primal_residual;
  j["dual_residual"] = sol.dual_residual;
  j["consensus_gap"] = sol.consensus_gap;
  j["iterations"] = sol.iterations;
  j["wall_seconds"] = sol.wall_seconds;
  j["converged"] = sol.converged;
  j["status"] = sol.status;
  return j.dump(2);
}

}  // namespace hoqt
