#include "lrtc/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrtc/errors.hpp"

namespace lrtc {

namespace {

constexpr char kMagic[8] = {'T', 'N', 'S', '3', 'B', 'I', 'N', '1'};

bool has_magic(std::ifstream& in) {
  char head[8] = {};
  in.read(head, sizeof(head));
  const bool match = in.gcount() == 8 && std::memcmp(head, kMagic, 8) == 0;
  in.clear();
  in.seekg(0);
  return match;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

struct RawTensor {
  Index m, n, p;
  std::vector<double> values;
};

RawTensor read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);

  RawTensor raw;
  if (has_magic(in)) {
    in.seekg(8);
    raw.m = static_cast<Index>(read_u64(in));
    raw.n = static_cast<Index>(read_u64(in));
    raw.p = static_cast<Index>(read_u64(in));
    if (!in || raw.m <= 0 || raw.n <= 0 || raw.p <= 0) {
      throw input_error(path + ": bad binary header");
    }
    const Index count = raw.m * raw.n * raw.p;
    raw.values.resize(count);
    in.read(reinterpret_cast<char*>(raw.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
      throw input_error(path + ": truncated binary payload");
    }
    return raw;
  }

  std::string header;
  if (!std::getline(in, header)) throw input_error(path + ": empty file");
  std::istringstream hs(header);
  if (!(hs >> raw.m >> raw.n >> raw.p) || raw.m <= 0 || raw.n <= 0 || raw.p <= 0) {
    throw input_error(path + ": header must be three positive dims");
  }
  std::string trailing;
  if (hs >> trailing) throw input_error(path + ": unexpected token '" + trailing + "' in header");

  const Index count = raw.m * raw.n * raw.p;
  raw.values.reserve(count);
  double v;
  while (in >> v) raw.values.push_back(v);
  if (!in.eof()) {
    std::string tok;
    in.clear();
    in >> tok;
    throw input_error(path + ": unparsable value near '" + tok + "'");
  }
  if (static_cast<Index>(raw.values.size()) != count) {
    throw input_error(path + ": expected " + std::to_string(count) + " values, found " +
                      std::to_string(raw.values.size()));
  }
  return raw;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    double back;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

Tensor3 read_tensor(const std::string& path) {
  RawTensor raw = read_raw(path);
  return Tensor3::from_values(raw.m, raw.n, raw.p, std::move(raw.values));
}

void write_tensor(const std::string& path, const Tensor3& t, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path);
  if (binary) {
    out.write(kMagic, 8);
    write_u64(out, static_cast<std::uint64_t>(t.dim0()));
    write_u64(out, static_cast<std::uint64_t>(t.dim1()));
    write_u64(out, static_cast<std::uint64_t>(t.dim2()));
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  } else {
    out << t.dim0() << ' ' << t.dim1() << ' ' << t.dim2() << '\n';
    const auto& v = t.values();
    const Index per_line = t.dim0();
    for (std::size_t i = 0; i < v.size(); ++i) {
      out << format_double(v[i]);
      out << (((i + 1) % static_cast<std::size_t>(per_line) == 0) ? '\n' : ' ');
    }
  }
  if (!out) throw input_error("write failed for " + path);
}

Mask3 read_mask(const std::string& path) {
  RawTensor raw = read_raw(path);
  std::vector<std::uint8_t> bits(raw.values.size());
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    if (raw.values[i] == 0.0) {
      bits[i] = 0;
    } else if (raw.values[i] == 1.0) {
      bits[i] = 1;
    } else {
      throw input_error(path + ": mask entries must be 0 or 1");
    }
  }
  return Mask3::from_values(raw.m, raw.n, raw.p, std::move(bits));
}

void write_mask(const std::string& path, const Mask3& mask, bool binary) {
  Tensor3 t(mask.dim0(), mask.dim1(), mask.dim2());
  for (std::size_t i = 0; i < mask.values().size(); ++i) {
    t.values()[i] = static_cast<double>(mask.values()[i]);
  }
  write_tensor(path, t, binary);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw input_error(path + ": bad CSV cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw input_error(path + ": ragged CSV rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error(path + ": empty CSV");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      out << format_double(m(i, j)) << (j + 1 < m.cols() ? "," : "\n");
    }
  }
  if (!out) throw input_error("write failed for " + path);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

void RunManifest::add_config(const std::string& key, const std::string& value) {
  config.emplace_back(key, value);
}

void RunManifest::add_input(const std::string& path) {
  inputs.emplace_back(path, file_digest(path));
}

void RunManifest::write(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  doc["config"] = cfg;
  nlohmann::ordered_json ins = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs) ins[k] = v;
  doc["inputs"] = ins;
  doc["outputs"] = outputs;
  doc["wall_seconds"] = wall_seconds;
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace lrtc
