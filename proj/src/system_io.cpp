#include "ftns/system_io.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace ftns {

using nlohmann::json;

namespace {

void position_of(const std::string& text, std::size_t byte, int& line, int& col) {
  line = 1;
  col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, 0, 0); }

int to_int(const std::string& key, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    fail("non-integer " + what + " key '" + key + "'");
  }
}

Index parse_tuple(const std::string& key, int D) {
  Index idx;
  std::istringstream in(key);
  std::string tok;
  while (in >> tok) {
    const int v = to_int(tok, "index");
    if (v < 1 || v > D) fail("index " + tok + " outside 1.." + std::to_string(D));
    idx.push_back(v - 1);
  }
  return idx;
}

cplx parse_scalar(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  fail("matrix entry must be a number or [re, im]");
}

Mat parse_mat(const json& v) {
  if (!v.is_array() || v.empty()) fail("matrix must be a non-empty list of rows");
  const long rows = static_cast<long>(v.size());
  if (!v[0].is_array() || v[0].empty()) fail("matrix rows must be non-empty lists");
  const long cols = static_cast<long>(v[0].size());
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!v[r].is_array() || static_cast<long>(v[r].size()) != cols) fail("ragged matrix rows");
    for (long c = 0; c < cols; ++c) m(r, c) = parse_scalar(v[r][c]);
  }
  return m;
}

bool parse_tensor(const json& obj, int D, MultiIndexTensor& out) {
  if (!obj.is_object()) fail("tensor must be an object mapping index tuples to matrices");
  if (obj.empty()) return false;
  int rank = -1;
  long rows = -1, cols = -1;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const Index idx = parse_tuple(it.key(), D);
    const Mat m = parse_mat(it.value());
    if (rank < 0) {
      rank = static_cast<int>(idx.size());
      rows = m.rows();
      cols = m.cols();
      out = MultiIndexTensor(D, rank, static_cast<int>(rows), static_cast<int>(cols));
    }
    if (static_cast<int>(idx.size()) != rank) fail("inconsistent tuple lengths in tensor");
    if (m.rows() != rows || m.cols() != cols) fail("inconsistent matrix shapes in tensor");
    out.at(idx) = m;
  }
  return true;
}

json scalar_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(scalar_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

std::string tuple_key(const Index& idx) {
  std::string k;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    if (a) k += ' ';
    k += std::to_string(idx[a] + 1);
  }
  return k;
}

json tensor_json(const MultiIndexTensor& t) {
  json obj = json::object();
  for (long f = 0; f < t.size(); ++f) {
    if (t.flat(f).isZero(0.0)) continue;
    obj[tuple_key(unflatten(f, t.dim(), t.rank()))] = mat_json(t.flat(f));
  }
  // An all-zero tensor keeps one explicit slot so rank and shape survive a round trip.
  if (obj.empty()) obj[tuple_key(Index(t.rank(), 0))] = mat_json(t.flat(0));
  return obj;
}

FTNSSystem from_json(const json& j) {
  if (!j.is_object()) fail("top level must be an object");
  for (const char* key : {"N", "D", "dims"})
    if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
  FTNSSystem sys;
  if (!j["N"].is_number_integer() || !j["D"].is_number_integer()) fail("N and D must be integers");
  sys.N = j["N"].get<int>();
  sys.D = j["D"].get<int>();
  if (sys.D < 1) fail("D must be positive");
  if (!j["dims"].is_array()) fail("dims must be a list");
  for (const auto& d : j["dims"]) {
    if (!d.is_number_integer()) fail("dims entries must be integers");
    sys.dims.push_back(d.get<int>());
  }
  if (j.contains("label")) {
    if (!j["label"].is_string()) fail("label must be a string");
    sys.label = j["label"].get<std::string>();
  }
  if (j.contains("A")) {
    const json& a = j["A"];
    if (!a.is_object()) fail("A must be an object");
    for (auto mu = a.begin(); mu != a.end(); ++mu) {
      if (!mu.value().is_object()) fail("A[mu] must be an object");
      for (auto nu = mu.value().begin(); nu != mu.value().end(); ++nu) {
        MultiIndexTensor t;
        if (parse_tensor(nu.value(), sys.D, t))
          sys.A[{to_int(mu.key(), "mu"), to_int(nu.key(), "nu")}] = t;
      }
    }
  }
  if (j.contains("B")) {
    const json& b = j["B"];
    if (!b.is_object()) fail("B must be an object");
    for (auto mu = b.begin(); mu != b.end(); ++mu) {
      if (!mu.value().is_object()) fail("B[mu] must be an object");
      for (auto rho = mu.value().begin(); rho != mu.value().end(); ++rho) {
        if (!rho.value().is_object()) fail("B[mu][rho] must be an object");
        for (auto nu = rho.value().begin(); nu != rho.value().end(); ++nu) {
          MultiIndexTensor t;
          if (parse_tensor(nu.value(), sys.D, t))
            sys.B[{to_int(mu.key(), "mu"), to_int(rho.key(), "rho"), to_int(nu.key(), "nu")}] = t;
        }
      }
    }
  }
  if (j.contains("fields")) {
    if (!j["fields"].is_array()) fail("fields must be a list");
    for (const auto& f : j["fields"]) {
      if (!f.is_object() || !f.contains("name") || !f.contains("block") || !f.contains("offset") ||
          !f.contains("size"))
        fail("field entries need name, block, offset and size");
      sys.fields.push_back({f["name"].get<std::string>(), f["block"].get<int>(),
                            f["offset"].get<int>(), f["size"].get<int>()});
    }
  }
  return sys;
}

}  // namespace

namespace detail {

json tensor_to_json(const MultiIndexTensor& t) { return tensor_json(t); }
bool tensor_from_json(const json& j, int D, MultiIndexTensor& out) { return parse_tensor(j, D, out); }
json mat_to_json(const Mat& m) { return mat_json(m); }
Mat mat_from_json(const json& j) { return parse_mat(j); }

}  // namespace detail

FTNSSystem parse_system(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 0, col = 0;
    position_of(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    throw ParseError(std::string("syntax error: ") + e.what(), line, col);
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed system: ") + e.what(), 0, 0);
  } catch (const TensorError& e) {
    throw ParseError(std::string("malformed system: ") + e.what(), 0, 0);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

FTNSSystem load_system(const std::string& path) { return parse_system(read_file(path)); }

std::string serialize_system(const FTNSSystem& sys) {
  json j;
  j["label"] = sys.label;
  j["N"] = sys.N;
  j["D"] = sys.D;
  j["dims"] = sys.dims;
  json a = json::object();
  for (const auto& [key, t] : sys.A)
    a[std::to_string(key.first)][std::to_string(key.second)] = tensor_json(t);
  j["A"] = a;
  json b = json::object();
  for (const auto& [key, t] : sys.B)
    b[std::to_string(std::get<0>(key))][std::to_string(std::get<1>(key))]
     [std::to_string(std::get<2>(key))] = tensor_json(t);
  j["B"] = b;
  if (!sys.fields.empty()) {
    json f = json::array();
    for (const auto& x : sys.fields)
      f.push_back({{"name", x.name}, {"block", x.block}, {"offset", x.offset}, {"size", x.size}});
    j["fields"] = f;
  }
  return j.dump(1) + "\n";
}

void save_system(const FTNSSystem& sys, const std::string& path) {
  write_file(path, serialize_system(sys));
}

bool systems_equal(const FTNSSystem& a, const FTNSSystem& b) {
  if (a.N != b.N || a.D != b.D || a.dims != b.dims || a.label != b.label) return false;
  if (a.A.size() != b.A.size() || a.B.size() != b.B.size()) return false;
  if (a.fields.size() != b.fields.size()) return false;
  for (std::size_t k = 0; k < a.fields.size(); ++k) {
    const auto &x = a.fields[k], &y = b.fields[k];
    if (x.name != y.name || x.block != y.block || x.offset != y.offset || x.size != y.size)
      return false;
  }
  auto same = [](const MultiIndexTensor& x, const MultiIndexTensor& y) {
    if (!x.same_shape(y)) return false;
    for (long f = 0; f < x.size(); ++f)
      if (x.flat(f) != y.flat(f)) return false;
    return true;
  };
  for (const auto& [k, t] : a.A) {
    auto it = b.A.find(k);
    if (it == b.A.end() || !same(t, it->second)) return false;
  }
  for (const auto& [k, t] : a.B) {
    auto it = b.B.find(k);
    if (it == b.B.end() || !same(t, it->second)) return false;
  }
  return true;
}

std::string serialize_matrix(const Mat& m, const std::vector<std::string>& labels) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["basis"] = labels;
  j["entries"] = mat_json(m);
  return j.dump(1) + "\n";
}

Mat parse_matrix(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 0, col = 0;
    position_of(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    throw ParseError(std::string("syntax error: ") + e.what(), line, col);
  }
  if (!j.contains("entries")) throw ParseError("matrix file lacks 'entries'", 0, 0);
  try {
    return parse_mat(j["entries"]);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed matrix: ") + e.what(), 0, 0);
  }
}

}  // namespace ftns
