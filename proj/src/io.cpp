#include "lpsim/io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lpsim/errors.hpp"
#include "lpsim/rng.hpp"

namespace lpsim {

namespace {

constexpr char kMagic[4] = {'L', 'P', 'T', '1'};
constexpr int kMaxRank = 8;

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<unsigned char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = (v >> (8 * i)) & 0xFF;
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<unsigned char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = (v >> (8 * i)) & 0xFF;
  os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), 4))
    throw format_error("tensor file truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), 8))
    throw format_error("tensor file truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

static_assert(sizeof(float) == 4);

} // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  if (t.rank() > kMaxRank) throw format_error("tensor rank exceeds 8");
  os.write(kMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (std::int64_t e : t.shape()) put_u64(os, static_cast<std::uint64_t>(e));
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    std::uint32_t bits;
    const float v = t[i];
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
  }
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw format_error("tensor file: bad magic");
  const std::uint32_t rank = get_u32(is);
  if (rank > kMaxRank) throw format_error("tensor file: rank exceeds 8");
  Shape shape;
  std::int64_t numel = 1;
  for (std::uint32_t d = 0; d < rank; ++d) {
    const std::uint64_t e = get_u64(is);
    if (e > (std::uint64_t{1} << 40)) throw format_error("tensor file: extent too large");
    shape.push_back(static_cast<std::int64_t>(e));
    numel *= static_cast<std::int64_t>(e);
  }
  std::vector<float> data(static_cast<std::size_t>(numel));
  for (std::int64_t i = 0; i < numel; ++i) {
    const std::uint32_t bits = get_u32(is);
    std::memcpy(&data[static_cast<std::size_t>(i)], &bits, 4);
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open " + path + " for writing");
  write_tensor(os, t);
  if (!os) throw format_error("failed writing " + path);
}

Tensor read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open " + path);
  return read_tensor(is);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw format_error(std::string("invalid ") + what + ": '" + s + "'");
  }
}

} // namespace

NumberFormat parse_format(const std::string& text) {
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  if (kind == "float") {
    FloatFormat f{5, 2};
    if (parts.size() == 3) {
      f.exp_bits = parse_int(parts[1], "exp");
      f.man_bits = parse_int(parts[2], "man");
    } else if (parts.size() != 1) {
      throw format_error("float format needs exp and man: float:EXP:MAN");
    }
    validate(f);
    return f;
  }
  if (kind == "fixed") {
    FixedFormat f{8, 4, false, true};
    if (parts.size() >= 3) {
      f.wl = parse_int(parts[1], "wl");
      f.fl = parse_int(parts[2], "fl");
      for (std::size_t i = 3; i < parts.size(); ++i) {
        if (parts[i] == "symmetric") f.symmetric = true;
        else if (parts[i] == "wrap") f.saturate = false;
        else throw format_error("unknown fixed flag '" + parts[i] + "'");
      }
    } else if (parts.size() != 1) {
      throw format_error("fixed format needs wl and fl: fixed:WL:FL[:symmetric][:wrap]");
    }
    validate(f);
    return f;
  }
  if (kind == "block") {
    BlockFloatFormat f{8, {}};
    if (parts.size() >= 2) f.wl = parse_int(parts[1], "wl");
    if (parts.size() == 3) {
      const std::string& assign = parts[2];
      if (assign == "tensor") {
        f.block_dim.reset();
      } else if (assign.rfind("dim", 0) == 0) {
        f.block_dim = parse_int(assign.substr(3), "block dim");
      } else {
        throw format_error("block assignment must be 'tensor' or 'dimD'");
      }
    } else if (parts.size() > 3) {
      throw format_error("block format: block:WL[:tensor|:dimD]");
    }
    validate(f);
    return f;
  }
  throw format_error("unknown format kind '" + kind + "'");
}

std::string format_to_string(const NumberFormat& fmt) {
  std::ostringstream os;
  if (const auto* f = std::get_if<FloatFormat>(&fmt)) {
    os << "float:" << f->exp_bits << ":" << f->man_bits;
  } else if (const auto* f = std::get_if<FixedFormat>(&fmt)) {
    os << "fixed:" << f->wl << ":" << f->fl;
    if (f->symmetric) os << ":symmetric";
    if (!f->saturate) os << ":wrap";
  } else {
    const auto& b = std::get<BlockFloatFormat>(fmt);
    os << "block:" << b.wl << ":";
    if (b.block_dim) os << "dim" << *b.block_dim;
    else os << "tensor";
  }
  return os.str();
}

RoundingMode parse_rounding(const std::string& text) {
  if (text == "stochastic") return RoundingMode::Stochastic;
  if (text == "nearest_even") return RoundingMode::NearestEven;
  if (text == "nearest_away") return RoundingMode::NearestAway;
  if (text == "nearest_zero") return RoundingMode::NearestTowardZero;
  throw format_error("unknown rounding mode '" + text + "'");
}

namespace {

using nlohmann::json;

QuantSpec parse_spec_entry(const json& j, const std::string& category,
                           std::uint64_t default_seed,
                           std::uint64_t category_index) {
  if (!j.is_object())
    throw format_error("config key '" + category + "' must be an object");
  static const char* known[] = {"kind", "rounding", "seed",     "exp", "man",
                                "wl",   "fl",       "symmetric", "saturate",
                                "block"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok)
      throw format_error("config key '" + category + "': unknown field '" +
                         it.key() + "'");
  }
  if (!j.contains("kind"))
    throw format_error("config key '" + category + "': missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();

  QuantSpec spec;
  auto get_int = [&](const char* field) {
    if (!j.contains(field))
      throw format_error("config key '" + category + "': missing '" + field + "'");
    if (!j.at(field).is_number_integer())
      throw format_error("config key '" + category + "': '" + field +
                         "' must be an integer");
    return j.at(field).get<int>();
  };
  auto forbid = [&](const char* field) {
    if (j.contains(field))
      throw format_error("config key '" + category + "': field '" + field +
                         "' does not apply to kind '" + kind + "'");
  };

  if (kind == "float") {
    forbid("wl"); forbid("fl"); forbid("symmetric"); forbid("saturate"); forbid("block");
    FloatFormat f{get_int("exp"), get_int("man")};
    validate(f);
    spec.format = f;
  } else if (kind == "fixed") {
    forbid("exp"); forbid("man"); forbid("block");
    FixedFormat f{get_int("wl"), get_int("fl"), false, true};
    if (j.contains("symmetric")) f.symmetric = j.at("symmetric").get<bool>();
    if (j.contains("saturate")) f.saturate = j.at("saturate").get<bool>();
    validate(f);
    spec.format = f;
  } else if (kind == "block") {
    forbid("exp"); forbid("man"); forbid("fl"); forbid("symmetric"); forbid("saturate");
    BlockFloatFormat f{get_int("wl"), {}};
    if (j.contains("block")) {
      const json& b = j.at("block");
      if (b.is_string() && b.get<std::string>() == "tensor") {
        f.block_dim.reset();
      } else if (b.is_object() && b.contains("dim") && b.size() == 1 &&
                 b.at("dim").is_number_integer()) {
        f.block_dim = b.at("dim").get<int>();
      } else {
        throw format_error("config key '" + category +
                           "': 'block' must be \"tensor\" or {\"dim\": d}");
      }
    }
    validate(f);
    spec.format = f;
  } else {
    throw format_error("config key '" + category + "': unknown kind '" + kind + "'");
  }

  spec.mode = j.contains("rounding")
                  ? parse_rounding(j.at("rounding").get<std::string>())
                  : RoundingMode::NearestEven;
  spec.seed = j.contains("seed")
                  ? j.at("seed").get<std::uint64_t>()
                  : detail::mix64(default_seed ^
                                  detail::mix64(category_index));
  return spec;
}

} // namespace

QuantConfig parse_quant_config(const std::string& json_text,
                               std::uint64_t default_seed) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw format_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw format_error("config must be a JSON object");

  QuantConfig cfg;
  const std::pair<const char*, std::optional<QuantSpec>*> categories[] = {
      {"weight", &cfg.weight},       {"accumulator", &cfg.accumulator},
      {"gradient", &cfg.gradient},   {"activation", &cfg.activation},
      {"error", &cfg.error},
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const auto& [name, slot] : categories) known = known || it.key() == name;
    if (!known)
      throw format_error("unknown config key '" + it.key() + "'");
  }
  std::uint64_t index = 0;
  for (const auto& [name, slot] : categories) {
    if (j.contains(name))
      *slot = parse_spec_entry(j.at(name), name, default_seed, index);
    ++index;
  }
  return cfg;
}

QuantConfig load_quant_config(const std::string& path,
                              std::uint64_t default_seed) {
  std::ifstream is(path);
  if (!is) throw format_error("cannot open config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_quant_config(ss.str(), default_seed);
}

} // namespace lpsim
