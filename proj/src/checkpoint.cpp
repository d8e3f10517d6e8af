#include "phrasecomp/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "phrasecomp/error.hpp"

namespace phrasecomp {
namespace {

constexpr char kMagic[8] = {'P', 'H', 'R', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 1u << 30;

}  // namespace

void save_checkpoint(const ModelParams& params, std::ostream& out) {
  nlohmann::json header;
  header["kind"] = std::string(model_kind_name(params.kind));
  header["n"] = params.shape.n;
  header["t"] = params.shape.t;
  header["vocab_size"] = params.shape.vocab_size;
  header["activation"] = std::string(activation_name(params.activation));
  header["lexicon"] = params.lexicon.tokens();
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& a : params.arrays) {
    sections.push_back({{"name", a.name}, {"shape", a.shape}});
  }
  header["sections"] = std::move(sections);
  const std::string text = header.dump();

  out.write(kMagic, sizeof(kMagic));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : params.arrays) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    detail::write_le<std::uint64_t>(out, a.values.size());
    for (double v : a.values) detail::write_f32_le(out, static_cast<float>(v));
  }
  if (!out) throw IoError("failed to write checkpoint");
}

void save_checkpoint_file(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  save_checkpoint(params, out);
}

ModelParams load_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  const auto header_len = detail::read_le<std::uint32_t>(in);
  if (header_len > kMaxHeaderBytes) throw ParseError("checkpoint header too large");
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (!in) throw ParseError("truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint header: ") + e.what());
  }

  ModelParams params;
  try {
    params.kind = parse_model_kind(header.at("kind").get<std::string>());
    params.shape.n = header.at("n").get<std::size_t>();
    params.shape.t = header.at("t").get<std::size_t>();
    params.shape.vocab_size = header.at("vocab_size").get<std::size_t>();
    params.activation = parse_activation(header.at("activation").get<std::string>());
    params.lexicon = Lexicon(header.at("lexicon").get<std::vector<std::string>>());
    for (const auto& s : header.at("sections")) {
      ParamArray a;
      a.name = s.at("name").get<std::string>();
      a.shape = s.at("shape").get<std::vector<std::size_t>>();
      params.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header missing fields: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("checkpoint header invalid: ") + e.what());
  }

  // The section layout must be exactly what init_model produces for the kind.
  const ModelParams reference =
      init_model(params.kind, params.shape, 0, InitOptions{params.activation, 0.0});
  if (reference.arrays.size() != params.arrays.size()) {
    throw ParseError("checkpoint sections do not match model kind");
  }
  for (std::size_t i = 0; i < params.arrays.size(); ++i) {
    auto& a = params.arrays[i];
    if (a.name != reference.arrays[i].name || a.shape != reference.arrays[i].shape) {
      throw ParseError("checkpoint section '" + a.name + "' has unexpected name or shape");
    }
    const auto name_len = detail::read_le<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != a.name) throw ParseError("checkpoint section name mismatch");
    const auto count = detail::read_le<std::uint64_t>(in);
    if (count != reference.arrays[i].values.size()) {
      throw ParseError("checkpoint section '" + a.name + "' has wrong value count");
    }
    a.values.resize(count);
    for (auto& v : a.values) {
      v = static_cast<double>(detail::read_f32_le(in));
      if (!std::isfinite(v)) throw ParseError("checkpoint contains a non-finite parameter");
    }
  }
  if (is_lexicalized(params.kind) && !params.lexicon.empty() &&
      params.lexicon.size() != params.shape.vocab_size) {
    throw ParseError("checkpoint lexicon size does not match vocab_size");
  }
  return params;
}

ModelParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

void round_to_float32(ModelParams& params) {
  for (auto& a : params.arrays) {
    for (auto& v : a.values) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace phrasecomp
