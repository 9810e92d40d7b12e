#include "fraccv/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace fraccv {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& path) {
  auto s = path;
  s += ".json";
  return s;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void put_le(std::ofstream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xffu);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

nlohmann::json to_json(const GridSpec& grid) {
  return {{"dim", grid.dim},
          {"kind", to_string(grid.kind)},
          {"half_extent", grid.half_extent},
          {"points_per_axis", grid.points_per_axis},
          {"spacing", grid.spacing}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  g.dim = j.at("dim").get<int>();
  g.kind = grid_kind_from_string(j.at("kind").get<std::string>());
  g.half_extent = j.value("half_extent", 0.0);
  g.points_per_axis = j.at("points_per_axis").get<int>();
  return make_grid(g);
}

void write_field_csv(const SampledField& u, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto& g = u.grid();
  static const char* axis_names[] = {"x", "y", "z"};
  for (int d = 0; d < g.dim; ++d) out << axis_names[d] << ',';
  for (int c = 0; c < u.components(); ++c) out << "u" << c << (c + 1 < u.components() ? "," : "\n");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < u.num_points(); ++i) {
    auto x = g.point(i);
    for (int d = 0; d < g.dim; ++d) out << x[d] << ',';
    for (int c = 0; c < u.components(); ++c)
      out << u(i, c) << (c + 1 < u.components() ? "," : "\n");
  }
}

void write_field_binary(const SampledField& u, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (double v : u.values()) put_le(out, v);
  nlohmann::json meta = {{"grid", to_json(u.grid())},
                         {"components", u.components()},
                         {"decay_class", to_string(u.decay())},
                         {"dtype", "float64"},
                         {"byte_order", "little-endian"},
                         {"layout", "row-major over axes (axis 0 slowest), components innermost"}};
  write_json(meta, sidecar(path));
}

SampledField read_field_binary(const std::filesystem::path& path) {
  auto meta = read_json(sidecar(path));
  if (meta.value("byte_order", "little-endian") != "little-endian" ||
      meta.value("dtype", "float64") != "float64")
    throw Error("unsupported field encoding in " + sidecar(path).string());
  GridSpec g = grid_from_json(meta.at("grid"));
  const int m = meta.at("components").get<int>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t count = g.num_points() * static_cast<std::size_t>(m);
  if (raw.size() != count * 8) throw Error("field file size does not match its sidecar");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = get_le(raw.data() + 8 * i);
  return SampledField(g, m, std::move(values),
                      decay_class_from_string(meta.value("decay_class", "unknown")));
}

void write_mask(const Mask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(mask.inside.data()),
            static_cast<std::streamsize>(mask.inside.size()));
  write_json({{"grid", to_json(mask.grid)}, {"dtype", "uint8"}, {"layout", "row-major over axes"}},
             sidecar(path));
}

Mask read_mask(const std::filesystem::path& path) {
  auto meta = read_json(sidecar(path));
  Mask m;
  m.grid = grid_from_json(meta.at("grid"));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  m.inside.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (m.inside.size() != m.grid.num_points()) throw Error("mask file size does not match its sidecar");
  return m;
}

}  // namespace fraccv
