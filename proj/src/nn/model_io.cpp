#include "somn/nn/model_io.hpp"

#include "somn/byte_io.hpp"
#include "somn/errors.hpp"
#include "somn/ingest.hpp"

namespace somn::nn {

std::vector<std::uint8_t> encode_model(const CnnModel& model) {
  const auto& s = model.spec;
  io::ByteWriter w;
  w.raw("SMNN", 4);
  w.le(kModelFormatVersion);
  w.le(static_cast<std::uint32_t>(s.input_length));
  for (std::size_t v : {s.n_blocks, s.filters, s.kernel, s.dense1, s.dense2, s.n_outputs})
    w.le(static_cast<std::uint16_t>(v));
  w.f64(s.dropout_p);
  w.le(model.rng_seed);
  w.le(static_cast<std::uint64_t>(model.params.size()));
  w.f64s(model.params);
  return w.bytes();
}

CnnModel decode_model(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_input) {
  io::ByteReader r(bytes);
  if (r.fixed(4) != "SMNN") throw FormatError("not a model file (bad magic)");
  if (const auto v = r.le<std::uint16_t>(); v != kModelFormatVersion)
    throw FormatError("unsupported model file version " + std::to_string(v));
  CnnModel m;
  auto& s = m.spec;
  s.input_length = r.le<std::uint32_t>();
  s.n_blocks = r.le<std::uint16_t>();
  s.filters = r.le<std::uint16_t>();
  s.kernel = r.le<std::uint16_t>();
  s.dense1 = r.le<std::uint16_t>();
  s.dense2 = r.le<std::uint16_t>();
  s.n_outputs = r.le<std::uint16_t>();
  s.dropout_p = r.f64();
  m.rng_seed = r.le<std::uint64_t>();
  try {
    s.validate();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("model file holds an invalid architecture: ") + e.what());
  }
  if (expected_input) {
    ArchitectureSpec want;
    try {
      want = ArchitectureSpec::for_input(*expected_input);
    } catch (const ShapeError& e) {
      throw FormatError(e.what());
    }
    if (s.input_length != want.input_length || s.n_blocks != want.n_blocks)
      throw FormatError("model architecture (" + std::to_string(s.input_length) + " samples, " +
                        std::to_string(s.n_blocks) + " blocks) does not match input length " +
                        std::to_string(*expected_input));
  }
  const auto count = r.le<std::uint64_t>();
  if (count != ParamLayout(s).total)
    throw FormatError("parameter count " + std::to_string(count) + " does not match the architecture");
  m.params.resize(count);
  r.f64s(m.params);
  if (!r.at_end()) throw FormatError("trailing bytes after model parameters");
  return m;
}

void save_model(const std::string& path, const CnnModel& model) { io::write_file(path, encode_model(model)); }

CnnModel load_model(const std::string& path, std::optional<std::size_t> expected_input) {
  return decode_model(read_file_bytes(path), expected_input);
}

}  // namespace somn::nn
