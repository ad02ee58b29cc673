#include "nvie/weights.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace nvie {

namespace {

constexpr int kFieldsPerPoint = 3 * kWeightFields;

std::array<double, kWeightFields> dyad_fields(const Vec3& u) {
  return {1.0,           u.x() * u.x(), u.y() * u.y(), u.z() * u.z(),
          u.x() * u.y(), u.x() * u.z(), u.y() * u.z()};
}

// Accumulates ray contributions: along a ray u is fixed, so only the radial
// factor and the Lagrange product vary.
void accumulate_rays(const CubeMinusBallRule& rule, const LagrangeBasis1D& basis,
                     std::vector<double>& acc) {
  const int m = basis.size();
  const int M = m * m * m;
  const Vec3& c = rule.center();
  Eigen::MatrixXd T;
  Eigen::MatrixXd U;
  Eigen::MatrixXd S(m * m, 3 * m);
  std::array<double, 16> lx{}, ly{}, lz{};
  const auto mm = static_cast<std::size_t>(m);
  for (const RaySegment& ray : rule.rays()) {
    const auto Q = static_cast<Eigen::Index>(ray.radius.size());
    T.resize(Q, m * m);
    U.resize(Q, 3 * m);
    for (Eigen::Index q = 0; q < Q; ++q) {
      const double r = ray.radius[static_cast<std::size_t>(q)];
      const Vec3 p = c + r * ray.direction;
      basis.evaluate(p.x(), std::span<double>(lx.data(), mm));
      basis.evaluate(p.y(), std::span<double>(ly.data(), mm));
      basis.evaluate(p.z(), std::span<double>(lz.data(), mm));
      for (int b = 0; b < m; ++b) {
        for (int a = 0; a < m; ++a) {
          T(q, a + m * b) = lx[static_cast<std::size_t>(a)] * ly[static_cast<std::size_t>(b)];
        }
      }
      // weight carries no r^2; r^2 / r^k = r^(2-k)
      const double w = ray.weight[static_cast<std::size_t>(q)];
      const double radial[3] = {w * r, w, w / r};
      for (int k = 0; k < 3; ++k) {
        for (int cc = 0; cc < m; ++cc) {
          U(q, cc + m * k) = radial[k] * lz[static_cast<std::size_t>(cc)];
        }
      }
    }
    S.noalias() = T.transpose() * U;
    const auto h = dyad_fields(ray.direction);
    for (int k = 0; k < 3; ++k) {
      for (int cc = 0; cc < m; ++cc) {
        for (int ab = 0; ab < m * m; ++ab) {
          const double v = S(ab, cc + m * k);
          double* out = &acc[(static_cast<std::size_t>(k) * M + ab + m * m * cc) * kWeightFields];
          for (int f = 0; f < kWeightFields; ++f) {
            out[f] += h[static_cast<std::size_t>(f)] * v;
          }
        }
      }
    }
  }
}

// Tensor boxes: the kernel is sampled on the n^3 grid and contracted against
// the Lagrange factors one axis at a time.
void accumulate_boxes(const CubeMinusBallRule& rule, const LagrangeBasis1D& basis,
                      std::vector<double>& acc) {
  const int m = basis.size();
  const int M = m * m * m;
  const GaussRule1D& g = rule.box_rule();
  const int n = g.order;
  const Vec3& c = rule.center();
  const auto mm = static_cast<std::size_t>(m);
  Eigen::MatrixXd Lx(n, m), Ly(n, m), Lz(n, m);
  std::vector<double> F(static_cast<std::size_t>(n * n * n * kFieldsPerPoint));
  std::vector<double> G2(static_cast<std::size_t>(kFieldsPerPoint * n * m * m));
  Eigen::MatrixXd G1(m, n * n * kFieldsPerPoint);
  std::array<double, 16> buf{};
  std::array<std::vector<double>, 3> xs, ws;
  for (const QuadBox& box : rule.boxes()) {
    const Vec3 half = 0.5 * (box.hi - box.lo);
    const Vec3 mid = 0.5 * (box.hi + box.lo);
    Eigen::MatrixXd* L[3] = {&Lx, &Ly, &Lz};
    for (int a = 0; a < 3; ++a) {
      xs[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(n));
      ws[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const double x = mid[a] + half[a] * g.nodes[static_cast<std::size_t>(i)];
        xs[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = x;
        ws[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] =
            half[a] * g.weights[static_cast<std::size_t>(i)];
        basis.evaluate(x, std::span<double>(buf.data(), mm));
        for (int b = 0; b < m; ++b) {
          (*L[a])(i, b) = buf[static_cast<std::size_t>(b)];
        }
      }
    }
    // F layout: i + n*(j + n*(l + n*f))
    const std::size_t plane = static_cast<std::size_t>(n) * n * n;
    for (int l = 0; l < n; ++l) {
      for (int jj = 0; jj < n; ++jj) {
        for (int i = 0; i < n; ++i) {
          const Vec3 d(xs[0][static_cast<std::size_t>(i)] - c.x(),
                       xs[1][static_cast<std::size_t>(jj)] - c.y(),
                       xs[2][static_cast<std::size_t>(l)] - c.z());
          const double R = d.norm();
          const Vec3 u = d / R;
          const double w = ws[0][static_cast<std::size_t>(i)] *
                           ws[1][static_cast<std::size_t>(jj)] *
                           ws[2][static_cast<std::size_t>(l)];
          const auto h = dyad_fields(u);
          const double base[3] = {w / R, w / (R * R), w / (R * R * R)};
          const std::size_t at = static_cast<std::size_t>(i + n * (jj + n * l));
          for (int k = 0; k < 3; ++k) {
            for (int f = 0; f < kWeightFields; ++f) {
              F[at + plane * static_cast<std::size_t>(k * kWeightFields + f)] =
                  base[k] * h[static_cast<std::size_t>(f)];
            }
          }
        }
      }
    }
    const Eigen::Map<const Eigen::MatrixXd> Fm(F.data(), n, n * n * kFieldsPerPoint);
    G1.noalias() = Lx.transpose() * Fm;  // (a, j + n*(l + n*f))
    // G2 layout: a + m*(b + m*(l + n*f))
    for (int f = 0; f < kFieldsPerPoint; ++f) {
      for (int l = 0; l < n; ++l) {
        for (int b = 0; b < m; ++b) {
          for (int a = 0; a < m; ++a) {
            double s = 0.0;
            for (int jj = 0; jj < n; ++jj) {
              s += Ly(jj, b) * G1(a, jj + n * (l + n * f));
            }
            G2[static_cast<std::size_t>(a + m * (b + m * (l + n * f)))] = s;
          }
        }
      }
    }
    for (int f = 0; f < kFieldsPerPoint; ++f) {
      const int k = f / kWeightFields;
      const int field = f % kWeightFields;
      for (int cc = 0; cc < m; ++cc) {
        for (int ab = 0; ab < m * m; ++ab) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) {
            s += Lz(l, cc) * G2[static_cast<std::size_t>(ab + m * m * (l + n * f))];
          }
          acc[(static_cast<std::size_t>(k) * M + ab + m * m * cc) * kWeightFields +
              static_cast<std::size_t>(field)] += s;
        }
      }
    }
  }
}

std::vector<double> node_weights_at(int m, double delta, const Vec3& center,
                                    const BruteForceResolution& res) {
  const CubeMinusBallRule rule(center, delta, res);
  const LagrangeBasis1D basis(gauss_legendre_1d(m).nodes);
  const int M = m * m * m;
  std::vector<double> acc(static_cast<std::size_t>(3 * M * kWeightFields), 0.0);
  accumulate_rays(rule, basis, acc);
  accumulate_boxes(rule, basis, acc);
  return acc;
}

void check_table_delta(int m, double delta) {
  if (m < 1 || m > 16) {
    throw ParameterError("weight table: m must be in [1, 16], got " + std::to_string(m));
  }
  const ReferenceNodeSet nodes = reference_nodes(m);
  for (int j = 0; j < nodes.size(); ++j) {
    const Vec3& x = nodes.nodes[static_cast<std::size_t>(j)];
    const double room = 1.0 - x.cwiseAbs().maxCoeff();
    if (!(delta > 0.0) || !(delta < room)) {
      std::ostringstream os;
      os.precision(17);
      os << "delta=" << delta << " is invalid for m=" << m << ": the exclusion ball around node "
         << j << " (" << x.x() << ", " << x.y() << ", " << x.z()
         << ") must lie strictly inside the reference cube (need 0 < delta < " << room << ")";
      throw GeometryError(os.str());
    }
  }
}

struct SignedPermutation {
  std::array<int, 3> perm;   // output axis a reads input axis perm[a]
  std::array<int, 3> sign;   // +1 or -1
};

std::array<int, 3> apply_on_indices(const SignedPermutation& g, const std::array<int, 3>& t,
                                    int m) {
  std::array<int, 3> out{};
  for (std::size_t a = 0; a < 3; ++a) {
    const int src = t[static_cast<std::size_t>(g.perm[a])];
    out[a] = g.sign[a] > 0 ? src : m - 1 - src;
  }
  return out;
}

std::vector<SignedPermutation> octahedral_group() {
  std::vector<SignedPermutation> group;
  std::array<int, 3> perm{0, 1, 2};
  do {
    for (int s = 0; s < 8; ++s) {
      group.push_back({perm, {(s & 1) ? -1 : 1, (s & 2) ? -1 : 1, (s & 4) ? -1 : 1}});
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return group;
}

std::array<double, kWeightFields> pack(const RealDyadic& L, double scalar) {
  return {scalar, L(0, 0), L(1, 1), L(2, 2), L(0, 1), L(0, 2), L(1, 2)};
}

RealDyadic unpack(const double* v) {
  RealDyadic L;
  L << v[1], v[4], v[5], v[4], v[2], v[6], v[5], v[6], v[3];
  return L;
}

template <class T>
void put(std::uint64_t& h, const T& value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

RealDyadic WeightTable::matrix(int j, int k, int node) const {
  return unpack(&data[offset(j, k, node)]);
}

std::uint64_t WeightTable::compute_checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (double v : data) {
    put(h, v);
  }
  return h;
}

int orbit_representative(int m, int j) {
  std::array<int, 3> t{j % m, (j / m) % m, j / (m * m)};
  for (int& i : t) {
    i = std::min(i, m - 1 - i);
  }
  std::sort(t.begin(), t.end());
  return t[0] + m * (t[1] + m * t[2]);
}

std::vector<double> compute_node_weights(int m, double delta, int j,
                                         const BruteForceResolution& res) {
  res.validate();
  check_table_delta(m, delta);
  const ReferenceNodeSet nodes = reference_nodes(m);
  if (j < 0 || j >= nodes.size()) {
    throw ParameterError("compute_node_weights: node index out of range");
  }
  const Vec3 center = nodes.nodes[static_cast<std::size_t>(j)];
  const int M = nodes.size();
  std::vector<double> coarse = node_weights_at(m, delta, center, res.refined(0));
  std::array<double, 3> rel{};
  for (int level = 1; level <= res.max_refinements; ++level) {
    std::vector<double> fine = node_weights_at(m, delta, center, res.refined(level));
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      double diff = 0.0;
      double scale = 0.0;
      const std::size_t lo = static_cast<std::size_t>(k * M * kWeightFields);
      const std::size_t hi = lo + static_cast<std::size_t>(M * kWeightFields);
      for (std::size_t i = lo; i < hi; ++i) {
        diff = std::max(diff, std::abs(fine[i] - coarse[i]));
        scale = std::max(scale, std::abs(fine[i]));
      }
      rel[static_cast<std::size_t>(k)] = diff / std::max(scale, 1e-300);
      ok = ok && rel[static_cast<std::size_t>(k)] < res.rel_tol;
    }
    if (ok) {
      return fine;
    }
    coarse = std::move(fine);
  }
  const auto worst = std::max_element(rel.begin(), rel.end());
  std::ostringstream os;
  os << "weights for node " << j << " (m=" << m << ", delta=" << delta
     << ") did not converge: k=" << (worst - rel.begin()) + 1 << " relative change " << *worst;
  throw AccuracyError(os.str(), 0.0, 0.0, *worst);
}

WeightTable compute_weight_table(int m, double delta, const BruteForceResolution& res,
                                 const WeightProgress& progress) {
  res.validate();
  check_table_delta(m, delta);
  const ReferenceNodeSet nodes = reference_nodes(m);
  const int M = nodes.size();

  std::vector<int> reps;
  for (int j = 0; j < M; ++j) {
    if (orbit_representative(m, j) == j) {
      reps.push_back(j);
    }
  }
  std::vector<std::vector<double>> rep_data(reps.size());
  int done = 0;
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::size_t r = 0; r < reps.size(); ++r) {
    rep_data[r] = compute_node_weights(m, delta, reps[r], res);
#if defined(_OPENMP)
#pragma omp critical
#endif
    {
      ++done;
      if (progress) {
        progress(done, static_cast<int>(reps.size()));
      }
    }
  }

  WeightTable table;
  table.m = m;
  table.delta = delta;
  table.edge = 2.0;
  table.resolution_hash = res.hash();
  table.data.assign(static_cast<std::size_t>(M) * 3 * M * kWeightFields, 0.0);

  const auto group = octahedral_group();
  for (int j = 0; j < M; ++j) {
    const int rep = orbit_representative(m, j);
    const auto rep_pos = std::lower_bound(reps.begin(), reps.end(), rep) - reps.begin();
    const std::vector<double>& src = rep_data[static_cast<std::size_t>(rep_pos)];
    const auto jt = nodes.triple(j);
    const auto rt = nodes.triple(rep);
    const SignedPermutation* g = nullptr;
    for (const auto& cand : group) {
      if (apply_on_indices(cand, rt, m) == jt) {
        g = &cand;
        break;
      }
    }
    RealDyadic P = RealDyadic::Zero();
    for (std::size_t a = 0; a < 3; ++a) {
      P(static_cast<int>(a), g->perm[a]) = g->sign[a];
    }
    for (int k = 1; k <= 3; ++k) {
      for (int node = 0; node < M; ++node) {
        const double* s =
            &src[(static_cast<std::size_t>(k - 1) * M + static_cast<std::size_t>(node)) *
                 kWeightFields];
        const int target_node = [&] {
          const auto t = apply_on_indices(*g, nodes.triple(node), m);
          return nodes.index(t[0], t[1], t[2]);
        }();
        const RealDyadic L = P * unpack(s) * P.transpose();
        const auto packed = pack(L, s[0]);
        std::copy(packed.begin(), packed.end(), &table.data[table.offset(j, k, target_node)]);
      }
    }
  }
  table.checksum = table.compute_checksum();
  return table;
}

WeightTable scale_weight_table(const WeightTable& table, double a) {
  if (!(a > 0.0)) {
    throw ParameterError("scale_weight_table: edge length must be positive");
  }
  WeightTable out = table;
  out.edge = a;
  const int M = table.nodes();
  const double base = table.edge / a;
  for (int j = 0; j < M; ++j) {
    double factor = 1.0;
    for (int k = 1; k <= 3; ++k) {
      factor *= base;
      double* p = &out.data[out.offset(j, k, 0)];
      for (int i = 0; i < M * kWeightFields; ++i) {
        p[i] *= factor;
      }
    }
  }
  out.checksum = out.compute_checksum();
  return out;
}

KernelRecipe sample_recipe() {
  KernelRecipe r;
  r.scalar = {1.0, 1.0, 1.0};
  r.matrix = {-1.0, -3.0, -3.0};
  return r;
}

KernelRecipe greens_recipe(double k) {
  if (k == 0.0) {
    throw ParameterError("greens_recipe: k must be non-zero");
  }
  KernelRecipe r;
  r.scalar = {1.0, -kI / k, Complex(-1.0 / (k * k))};
  r.matrix = {-1.0, 3.0 * kI / k, Complex(3.0 / (k * k))};
  return r;
}

ComplexDyadic weight_combination(const WeightTable& table, int j, int node,
                                 const KernelRecipe& recipe) {
  ComplexDyadic out = ComplexDyadic::Zero();
  for (int k = 1; k <= 3; ++k) {
    const double* v = &table.data[table.offset(j, k, node)];
    const Complex cs = recipe.scalar[static_cast<std::size_t>(k - 1)];
    const Complex cm = recipe.matrix[static_cast<std::size_t>(k - 1)];
    out += cs * v[0] * ComplexDyadic::Identity() + cm * unpack(v).cast<Complex>();
  }
  return out;
}

ComplexDyadic apply_weights(const WeightTable& table, int j, std::span<const Complex> f_values,
                            const KernelRecipe& recipe) {
  const int M = table.nodes();
  if (static_cast<int>(f_values.size()) != M) {
    throw ParameterError("apply_weights: expected " + std::to_string(M) + " values, got " +
                         std::to_string(f_values.size()));
  }
  if (j < 0 || j >= M) {
    throw ParameterError("apply_weights: singularity index out of range");
  }
  ComplexDyadic out = ComplexDyadic::Zero();
  for (int node = 0; node < M; ++node) {
    const Complex f = f_values[static_cast<std::size_t>(node)];
    if (f != Complex{}) {
      out += f * weight_combination(table, j, node, recipe);
    }
  }
  return out;
}

std::string table_header(const WeightTable& table) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", table.delta);
  os << "VIEWT " << kTableFormatVersion << " m=" << table.m << " delta=" << buf << " res=" << std::hex
     << table.resolution_hash;
  return os.str();
}

std::string table_file_name(int m, double delta) {
  return "weights_m" + std::to_string(m) + "_d" + format_double(delta) + ".viewt";
}

void save_table(const WeightTable& table, const std::filesystem::path& path) {
  if (table.edge != 2.0) {
    throw MisuseError("save_table: only reference-cube tables (edge 2) can be saved");
  }
  const auto expected = static_cast<std::size_t>(table.nodes()) * 3 * table.nodes() * kWeightFields;
  if (table.data.size() != expected) {
    throw MisuseError("save_table: table payload has the wrong size");
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ConfigError("save_table: cannot open " + tmp.string() + " for writing");
    }
    out << table_header(table) << '\n';
    const std::uint64_t count = table.data.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(table.data.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    const std::uint64_t sum = table.compute_checksum();
    out.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
    if (!out) {
      throw ConfigError("save_table: write to " + tmp.string() + " failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

WeightTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("load_table: cannot open " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw CorruptionError("load_table: " + path.string() + " is empty");
  }
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  hs >> magic >> version;
  if (magic != "VIEWT") {
    throw FormatError("load_table: " + path.string() + " is not a weight-table file");
  }
  if (version != kTableFormatVersion) {
    throw FormatError("load_table: unsupported format version " + std::to_string(version) +
                      " (expected " + std::to_string(kTableFormatVersion) + ")");
  }
  WeightTable table;
  std::string token;
  bool have_m = false, have_delta = false, have_res = false;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw FormatError("load_table: malformed header token '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "m") {
        table.m = std::stoi(value);
        have_m = true;
      } else if (key == "delta") {
        table.delta = std::strtod(value.c_str(), nullptr);
        have_delta = true;
      } else if (key == "res") {
        table.resolution_hash = std::stoull(value, nullptr, 16);
        have_res = true;
      }
    } catch (const std::exception&) {
      throw FormatError("load_table: malformed header value '" + token + "'");
    }
  }
  if (!have_m || !have_delta || !have_res || table.m < 1 || table.m > 16) {
    throw FormatError("load_table: header is missing m, delta or res: '" + header + "'");
  }
  std::uint64_t count = 0;
  if (!in.read(reinterpret_cast<char*>(&count), sizeof(count))) {
    throw CorruptionError("load_table: truncated file (no payload length)");
  }
  const auto expected = static_cast<std::uint64_t>(table.nodes()) * 3 * table.nodes() * kWeightFields;
  if (count != expected) {
    throw CorruptionError("load_table: payload length " + std::to_string(count) +
                          " does not match m=" + std::to_string(table.m));
  }
  table.data.resize(static_cast<std::size_t>(count));
  if (!in.read(reinterpret_cast<char*>(table.data.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw CorruptionError("load_table: truncated payload in " + path.string());
  }
  std::uint64_t stored = 0;
  if (!in.read(reinterpret_cast<char*>(&stored), sizeof(stored))) {
    throw CorruptionError("load_table: missing checksum in " + path.string());
  }
  table.checksum = table.compute_checksum();
  if (stored != table.checksum) {
    throw CorruptionError("load_table: checksum mismatch in " + path.string());
  }
  return table;
}

}  // namespace nvie
