#include "choir/io/ply.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "choir/error.hpp"

namespace choir::io {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

std::string format_ply(const PlyData& ply) {
  if (ply.quality && ply.quality->size() != ply.vertices.size()) {
    throw ShapeError("ply: " + std::to_string(ply.quality->size()) + " quality values for " +
                     std::to_string(ply.vertices.size()) + " vertices");
  }
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\n";
  for (const auto& c : ply.comments) {
    if (c.find('\n') != std::string::npos) throw UsageError("ply: comment contains a newline");
    os << "comment " << c << '\n';
  }
  os << "element vertex " << ply.vertices.size() << '\n';
  os << "property double x\nproperty double y\nproperty double z\n";
  if (ply.quality) os << "property double quality\n";
  if (!ply.faces.empty()) {
    os << "element face " << ply.faces.size() << '\n';
    os << "property list uchar int vertex_indices\n";
  }
  os << "end_header\n";
  for (std::size_t i = 0; i < ply.vertices.size(); ++i) {
    const auto& v = ply.vertices[i];
    os << fmt(v.x()) << ' ' << fmt(v.y()) << ' ' << fmt(v.z());
    if (ply.quality) os << ' ' << fmt((*ply.quality)[i]);
    os << '\n';
  }
  for (const auto& f : ply.faces) os << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  return os.str();
}

void write_ply(const std::filesystem::path& path, const PlyData& ply) {
  const auto text = format_ply(ply);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("ply: cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("ply: write failed for " + path.string());
}

PlyData parse_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& what) { throw DataError("ply: " + what); };
  if (!std::getline(in, line) || line != "ply") fail("missing 'ply' magic");
  if (!std::getline(in, line) || line != "format ascii 1.0") fail("only 'format ascii 1.0' is supported");

  PlyData ply;
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<std::string> vertex_props;
  enum { None, Vertex, Face, Other } current = None;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line == "end_header") {
      header_done = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "comment") {
      ply.comments.push_back(line.size() > 8 ? line.substr(8) : std::string());
    } else if (key == "element") {
      std::string name;
      std::size_t count = 0;
      if (!(ls >> name >> count)) fail("bad element line '" + line + "'");
      if (name == "vertex") {
        current = Vertex;
        n_vertices = count;
      } else if (name == "face") {
        current = Face;
        n_faces = count;
      } else {
        fail("unsupported element '" + name + "'");
      }
    } else if (key == "property") {
      std::string type;
      ls >> type;
      if (current == Vertex) {
        std::string name;
        if (type == "list" || !(ls >> name)) fail("bad vertex property '" + line + "'");
        vertex_props.push_back(name);
      } else if (current == Face) {
        if (type != "list") fail("face property must be a list");
      } else {
        fail("property outside an element");
      }
    } else if (key == "obj_info" || key.empty()) {
      continue;
    } else {
      fail("unexpected header line '" + line + "'");
    }
  }
  if (!header_done) fail("missing end_header");

  int ix = -1, iy = -1, iz = -1, iq = -1;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    const auto& p = vertex_props[i];
    const int idx = static_cast<int>(i);
    if (p == "x") ix = idx;
    else if (p == "y") iy = idx;
    else if (p == "z") iz = idx;
    else if (p == "quality" || p == "scalar_quality") iq = idx;
  }
  if (ix < 0 || iy < 0 || iz < 0) fail("vertex element lacks x/y/z");
  if (iq >= 0) ply.quality.emplace();

  ply.vertices.reserve(n_vertices);
  std::vector<double> row(vertex_props.size());
  for (std::size_t v = 0; v < n_vertices; ++v) {
    if (!std::getline(in, line)) fail("truncated vertex list at vertex " + std::to_string(v));
    std::istringstream ls(line);
    for (auto& x : row)
      if (!(ls >> x)) fail("bad vertex line " + std::to_string(v));
    ply.vertices.emplace_back(row[ix], row[iy], row[iz]);
    if (iq >= 0) ply.quality->push_back(row[iq]);
  }
  for (std::size_t f = 0; f < n_faces; ++f) {
    if (!std::getline(in, line)) fail("truncated face list at face " + std::to_string(f));
    std::istringstream ls(line);
    long count = 0, a = 0, b = 0, c = 0;
    if (!(ls >> count >> a >> b >> c) || count != 3) fail("only triangle faces are supported");
    for (long idx : {a, b, c})
      if (idx < 0 || static_cast<std::size_t>(idx) >= n_vertices) fail("face index out of range");
    ply.faces.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)});
  }
  return ply;
}

PlyData read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ply: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ply(ss.str());
}

}  // namespace choir::io
