#include "srir/ambisonic_ir.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "srir/error.hpp"

namespace srir {

const std::array<Vec3, kAmbiChannels>& tetrahedral_capsules() {
  static const std::array<Vec3, kAmbiChannels> caps = [] {
    const double s = 1.0 / std::sqrt(3.0);
    return std::array<Vec3, kAmbiChannels>{Vec3{s, s, s}, Vec3{s, -s, -s}, Vec3{-s, s, -s}, Vec3{-s, -s, s}};
  }();
  return caps;
}

AmbisonicIR AmbisonicIR::zeros(std::size_t length, double sample_rate) {
  AmbisonicIR ir;
  ir.sample_rate = sample_rate;
  for (auto& ch : ir.channels) ch.assign(length, 0.0);
  return ir;
}

void AmbisonicIR::resize(std::size_t n) {
  for (auto& ch : channels) ch.resize(n, 0.0);
}

AmbisonicIR AmbisonicIR::padded_to(std::size_t n) const {
  AmbisonicIR out = *this;
  out.resize(n);
  return out;
}

double AmbisonicIR::energy() const {
  double e = 0.0;
  for (const auto& ch : channels) {
    for (double v : ch) e += v * v;
  }
  return e;
}

std::vector<double> AmbisonicIR::omni() const {
  std::vector<double> out(length(), 0.0);
  for (const auto& ch : channels) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += ch[i];
  }
  for (double& v : out) v /= static_cast<double>(kAmbiChannels);
  return out;
}

bool AmbisonicIR::all_finite() const {
  for (const auto& ch : channels) {
    for (double v : ch) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void AmbisonicIR::validate() const {
  for (const auto& ch : channels) {
    if (ch.size() != channels[0].size()) fail(ErrorCode::kShape, "ambisonic channels differ in length");
  }
  if (!all_finite()) fail(ErrorCode::kNumerical, "ambisonic IR contains non-finite samples");
}

namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

json sidecar_to_json(const IrSidecar& s) {
  json caps = json::array();
  for (const auto& c : s.capsule_orientations) caps.push_back(vec_json(c));
  json doc = {{"format_tag", s.format == AmbiFormat::kA ? "A-format" : "B-format"},
              {"sample_rate", s.sample_rate},
              {"channels", kAmbiChannels}};
  if (s.format == AmbiFormat::kA) doc["capsule_orientations"] = caps;
  if (s.source) doc["source"] = vec_json(*s.source);
  if (s.listener) doc["listener"] = vec_json(*s.listener);
  if (s.lor_order) doc["n_O"] = *s.lor_order;
  return doc;
}

IrSidecar sidecar_from_json(const json& doc) {
  IrSidecar s;
  try {
    const auto tag = doc.value("format_tag", std::string("A-format"));
    if (tag == "A-format") {
      s.format = AmbiFormat::kA;
    } else if (tag == "B-format") {
      s.format = AmbiFormat::kB;
    } else {
      fail(ErrorCode::kConfig, "unknown format_tag '" + tag + "'");
    }
    s.sample_rate = doc.value("sample_rate", kDefaultSampleRate);
    if (doc.contains("capsule_orientations")) {
      const auto& caps = doc["capsule_orientations"];
      if (caps.size() != kAmbiChannels) fail(ErrorCode::kConfig, "capsule_orientations needs 4 vectors");
      for (std::size_t c = 0; c < kAmbiChannels; ++c) s.capsule_orientations[c] = vec_from(caps[c]);
    }
    if (doc.contains("source")) s.source = vec_from(doc["source"]);
    if (doc.contains("listener")) s.listener = vec_from(doc["listener"]);
    if (doc.contains("n_O")) s.lor_order = doc["n_O"].get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("malformed IR sidecar: ") + e.what());
  }
  return s;
}

IrSidecar sidecar_for(const AmbisonicIR& ir) {
  IrSidecar s;
  s.format = ir.format;
  s.sample_rate = ir.sample_rate;
  s.capsule_orientations = ir.capsule_orientations;
  return s;
}

// --- WAV -----------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}
std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

constexpr std::uint16_t kWavePcm = 1;
constexpr std::uint16_t kWaveFloat = 3;
constexpr std::uint16_t kWaveExtensible = 0xFFFE;

}  // namespace

void write_wav(const std::filesystem::path& path, const std::vector<std::vector<double>>& channels,
               double sample_rate) {
  if (channels.empty()) fail(ErrorCode::kShape, "cannot write a WAV with no channels");
  const std::size_t frames = channels[0].size();
  for (const auto& ch : channels) {
    if (ch.size() != frames) fail(ErrorCode::kShape, "WAV channels differ in length");
  }
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * n_ch * 4);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, kWaveFloat);
  put_u16(out, n_ch);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * n_ch * 4);
  put_u16(out, static_cast<std::uint16_t>(n_ch * 4));
  put_u16(out, 32);
  out.write("data", 4);
  put_u32(out, data_bytes);
  std::vector<char> buf(static_cast<std::size_t>(data_bytes));
  char* p = buf.data();
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : channels) {
      const float f = static_cast<float>(ch[i]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      for (int k = 0; k < 4; ++k) *p++ = static_cast<char>((bits >> (8 * k)) & 0xFF);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto bad = [&](const std::string& why) { fail(ErrorCode::kIo, path.string() + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    bad("not a RIFF/WAVE file");
  }
  std::uint16_t fmt = 0;
  std::uint16_t n_ch = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t len = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) {
      if (std::memcmp(chunk, "data", 4) != 0) bad("truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) bad("short fmt chunk");
      fmt = get_u16(chunk + 8);
      n_ch = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (fmt == kWaveExtensible && len >= 40) fmt = get_u16(chunk + 8 + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = std::min(len, bytes.size() - body);
    }
    pos = body + len + (len & 1);
  }
  if (n_ch == 0 || data == nullptr) bad("missing fmt or data chunk");
  const std::size_t width = bits / 8;
  if (!((fmt == kWavePcm && (bits == 16 || bits == 24 || bits == 32)) ||
        (fmt == kWaveFloat && (bits == 32 || bits == 64)))) {
    bad("unsupported sample format " + std::to_string(fmt) + "/" + std::to_string(bits));
  }
  const std::size_t frames = data_len / (width * n_ch);
  WavData out;
  out.sample_rate = rate;
  out.channels.assign(n_ch, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < n_ch; ++c) {
      const unsigned char* s = data + (i * n_ch + c) * width;
      double v = 0.0;
      if (fmt == kWaveFloat && bits == 32) {
        const std::uint32_t u = get_u32(s);
        float f;
        std::memcpy(&f, &u, 4);
        v = f;
      } else if (fmt == kWaveFloat) {
        std::uint64_t u = static_cast<std::uint64_t>(get_u32(s)) | (static_cast<std::uint64_t>(get_u32(s + 4)) << 32);
        std::memcpy(&v, &u, 8);
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(get_u16(s)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(get_u32(s)) / 2147483648.0;
      }
      out.channels[c][i] = v;
    }
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& wav_path) {
  auto p = wav_path;
  p.replace_extension(".json");
  return p;
}

void save_ir(const AmbisonicIR& ir, const std::filesystem::path& wav_path, const IrSidecar& sidecar) {
  ir.validate();
  write_wav(wav_path, {ir.channels.begin(), ir.channels.end()}, ir.sample_rate);
  std::ofstream out(sidecar_path(wav_path));
  if (!out) fail(ErrorCode::kIo, "cannot write " + sidecar_path(wav_path).string());
  out << sidecar_to_json(sidecar).dump(1) << '\n';
}

void save_ir(const AmbisonicIR& ir, const std::filesystem::path& wav_path) { save_ir(ir, wav_path, sidecar_for(ir)); }

AmbisonicIR load_ir(const std::filesystem::path& wav_path) {
  WavData wav = read_wav(wav_path);
  if (wav.channels.size() != kAmbiChannels) {
    fail(ErrorCode::kShape, wav_path.string() + ": expected 4 channels, found " + std::to_string(wav.channels.size()));
  }
  AmbisonicIR ir;
  ir.sample_rate = wav.sample_rate;
  for (std::size_t c = 0; c < kAmbiChannels; ++c) ir.channels[c] = std::move(wav.channels[c]);
  const auto side = sidecar_path(wav_path);
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    const IrSidecar s = sidecar_from_json(nlohmann::json::parse(in));
    ir.format = s.format;
    ir.capsule_orientations = s.capsule_orientations;
  }
  return ir;
}

}  // namespace srir
