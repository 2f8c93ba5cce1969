#include "gaugelab/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace gaugelab {

namespace {

constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw Error(ErrorKind::Config, "checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void put_magic(std::ostream& os, const char* m) { os.write(m, 4); }

void expect_magic(std::istream& is, const char* m) {
  char b[4];
  if (!is.read(b, 4) || std::memcmp(b, m, 4) != 0) throw Error(ErrorKind::Config, std::string("bad magic, expected ") + m);
  if (get<std::uint32_t>(is) != kVersion) throw Error(ErrorKind::Config, "unsupported checkpoint version");
}

void put_grid(std::ostream& os, const GridSpec& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.dims.size()));
  for (std::size_t i = 0; i < s.dims.size(); ++i) {
    put<std::int32_t>(os, s.dims[i]);
    put<double>(os, s.spacing[i]);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(s.blocks[i]));
  }
}

GridSpec get_grid(std::istream& is) {
  const auto axes = get<std::uint32_t>(is);
  if (axes == 0 || axes > 8) throw Error(ErrorKind::Config, "checkpoint grid has an invalid axis count");
  GridSpec s;
  for (std::uint32_t i = 0; i < axes; ++i) {
    s.dims.push_back(get<std::int32_t>(is));
    s.spacing.push_back(get<double>(is));
    const auto b = get<std::uint8_t>(is);
    if (b > 2) throw Error(ErrorKind::Config, "checkpoint grid has an invalid axis block");
    s.blocks.push_back(static_cast<AxisBlock>(b));
  }
  s.validate();
  return s;
}

void put_matrix(std::ostream& os, const Mat& m) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      put<double>(os, m(r, c).real());
      put<double>(os, m(r, c).imag());
    }
}

Mat get_matrix(std::istream& is, int n) {
  Mat m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double re = get<double>(is);
      const double im = get<double>(is);
      m(r, c) = Complex(re, im);
    }
  return m;
}

GridPtr resolve_grid(const GridSpec& s, GridPtr grid) {
  if (!grid) return Grid::make(s);
  if (!(grid->spec() == s)) throw Error(ErrorKind::Dimension, "cochain grid does not match the target grid");
  return grid;
}

}  // namespace

void write_cochain(std::ostream& os, const Cochain& x) {
  put_magic(os, "GLCC");
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(x.degree()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(x.n()));
  put_grid(os, x.grid().spec());
  put<std::uint64_t>(os, static_cast<std::uint64_t>(x.cells()));
  for (long c = 0; c < x.cells(); ++c) put_matrix(os, x.value(c).matrix());
}

Cochain read_cochain(std::istream& is, GridPtr grid) {
  expect_magic(is, "GLCC");
  const int degree = static_cast<int>(get<std::uint32_t>(is));
  const int n = static_cast<int>(get<std::uint32_t>(is));
  if (n < 2 || n > kMaxRank) throw Error(ErrorKind::Config, "checkpoint rank out of range");
  const GridSpec s = get_grid(is);
  if (degree < 0 || degree > static_cast<int>(s.dims.size())) throw Error(ErrorKind::Config, "checkpoint degree out of range");
  Cochain x(resolve_grid(s, std::move(grid)), degree, n);
  if (get<std::uint64_t>(is) != static_cast<std::uint64_t>(x.cells())) throw Error(ErrorKind::Config, "checkpoint cell count mismatch");
  for (long c = 0; c < x.cells(); ++c) x.set(c, AlgebraElement(get_matrix(is, n)));
  return x;
}

nlohmann::json grid_to_json(const GridSpec& s) {
  nlohmann::json blocks = nlohmann::json::array();
  for (AxisBlock b : s.blocks) blocks.push_back(to_string(b));
  return {{"dims", s.dims}, {"spacing", s.spacing}, {"blocks", blocks}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec s;
  try {
    s.dims = j.at("dims").get<std::vector<int>>();
    s.spacing = j.at("spacing").get<std::vector<double>>();
    for (const auto& b : j.at("blocks")) s.blocks.push_back(axis_block_from_string(b.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("grid json: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json cochain_to_json(const Cochain& x) {
  nlohmann::json cells = nlohmann::json::array();
  for (long c = 0; c < x.cells(); ++c) {
    const Mat m = x.value(c).matrix();
    nlohmann::json e = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r)
      for (int k = 0; k < m.cols(); ++k) e.push_back({m(r, k).real(), m(r, k).imag()});
    cells.push_back(std::move(e));
  }
  return {{"degree", x.degree()}, {"n", x.n()}, {"grid", grid_to_json(x.grid().spec())}, {"cells", std::move(cells)}};
}

Cochain cochain_from_json(const nlohmann::json& j, GridPtr grid) {
  try {
    const int n = j.at("n").get<int>();
    const int degree = j.at("degree").get<int>();
    if (n < 2 || n > kMaxRank) throw Error(ErrorKind::Config, "cochain json rank out of range");
    Cochain x(resolve_grid(grid_from_json(j.at("grid")), std::move(grid)), degree, n);
    const auto& cells = j.at("cells");
    if (cells.size() != static_cast<std::size_t>(x.cells())) throw Error(ErrorKind::Config, "cochain json cell count mismatch");
    for (long c = 0; c < x.cells(); ++c) {
      const auto& e = cells[c];
      if (e.size() != static_cast<std::size_t>(n * n)) throw Error(ErrorKind::Config, "cochain json entry count mismatch", c);
      Mat m(n, n);
      for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k) m(r, k) = Complex(e[r * n + k][0].get<double>(), e[r * n + k][1].get<double>());
      x.set(c, AlgebraElement(m));
    }
    return x;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("cochain json: ") + e.what());
  }
}

void write_checkpoint(const std::string& bin_path, const std::string& manifest_path, const Connection& c,
                      const CheckpointMeta& meta) {
  std::ofstream os(bin_path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + bin_path);
  const ReferenceTransport& ref = *c.ref();
  put_magic(os, "GLCX");
  put<std::uint32_t>(os, kVersion);
  put_grid(os, c.grid().spec());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.n()));
  for (const Mat& U : ref.links) put_matrix(os, U);
  write_cochain(os, c.a());

  nlohmann::json fluxes = nlohmann::json::array();
  for (const Flux& f : ref.twist.fluxes) fluxes.push_back({{"axis_a", f.axis_a}, {"axis_b", f.axis_b}, {"value", f.value}});
  const nlohmann::json manifest = {{"epsilon", meta.epsilon},
                                   {"kappa", meta.ip.kappa},
                                   {"seed", meta.seed},
                                   {"fingerprint", meta.fingerprint},
                                   {"twist", {{"n", ref.twist.n}, {"fluxes", fluxes}}}};
  std::ofstream ms(manifest_path);
  if (!ms) throw Error(ErrorKind::Config, "cannot write " + manifest_path);
  ms << manifest.dump(2) << "\n";
}

Connection read_checkpoint(const std::string& bin_path, const std::string& manifest_path, CheckpointMeta* meta) {
  std::ifstream ms(manifest_path);
  if (!ms) throw Error(ErrorKind::Config, "cannot read " + manifest_path);
  CheckpointMeta m;
  TwistSpec twist;
  try {
    const nlohmann::json j = nlohmann::json::parse(ms);
    m.epsilon = j.at("epsilon").get<double>();
    m.ip.kappa = j.at("kappa").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.fingerprint = j.at("fingerprint").get<std::string>();
    twist.n = j.at("twist").at("n").get<int>();
    for (const auto& f : j.at("twist").at("fluxes"))
      twist.fluxes.push_back(Flux{f.at("axis_a").get<int>(), f.at("axis_b").get<int>(), f.at("value").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("checkpoint manifest: ") + e.what());
  }

  std::ifstream is(bin_path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Config, "cannot read " + bin_path);
  expect_magic(is, "GLCX");
  GridPtr grid = Grid::make(get_grid(is));
  const int n = static_cast<int>(get<std::uint32_t>(is));
  if (n < 2 || n > kMaxRank || n != twist.n) throw Error(ErrorKind::Config, "checkpoint rank mismatch");
  std::vector<Mat> links(grid->cells(1));
  for (Mat& U : links) U = get_matrix(is, n);
  ReferencePtr ref = reference_from_links(grid, n, std::move(links), twist);
  Cochain a = read_cochain(is, grid);
  if (a.degree() != 1) throw Error(ErrorKind::Config, "checkpoint deviation is not a 1-cochain");
  if (meta) *meta = m;
  return Connection(ref, std::move(a), hodge_weights(*grid, m.epsilon, m.ip));
}

}  // namespace gaugelab
