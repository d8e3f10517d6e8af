#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "phrasecomp/model.hpp"

namespace phrasecomp {

// Checkpoint container, all integers little-endian:
//
//   8 bytes   magic "PHRCKPT1"
//   u32       header length L, then L bytes of UTF-8 JSON:
//             {"kind", "n", "t", "vocab_size", "activation", "lexicon": [...],
//              "sections": [{"name", "shape"}, ...]}
//   per section, in header order:
//     u32 name length, name bytes, u64 value count, values as float32
//
// Parameters are narrowed to float32 on save, so save -> load -> save is
// byte-identical and a loaded model equals its float32-rounded source.
void save_checkpoint(const ModelParams& params, std::ostream& out);
void save_checkpoint_file(const ModelParams& params, const std::string& path);

ModelParams load_checkpoint(std::istream& in);
ModelParams load_checkpoint_file(const std::string& path);

// Rounds every parameter to float32, i.e. the value a checkpoint round trip
// produces.
void round_to_float32(ModelParams& params);

}  // namespace phrasecomp
