#include "undf/wav.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "undf/errors.h"
#include "undf/pattern.h"

namespace undf {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t U32(std::size_t at) const {
    Need(at, 4);
    return static_cast<std::uint32_t>(bytes_[at]) | (static_cast<std::uint32_t>(bytes_[at + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes_[at + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes_[at + 3]) << 24);
  }
  std::uint16_t U16(std::size_t at) const {
    Need(at, 2);
    return static_cast<std::uint16_t>(bytes_[at] | (bytes_[at + 1] << 8));
  }
  std::string Tag(std::size_t at) const {
    Need(at, 4);
    return std::string(reinterpret_cast<const char*>(bytes_.data() + at), 4);
  }
  void Need(std::size_t at, std::size_t n) const {
    if (at + n > bytes_.size()) throw IngestionError("wav: truncated file");
  }
  std::size_t size() const { return bytes_.size(); }
  const std::uint8_t* data() const { return bytes_.data(); }

 private:
  std::span<const std::uint8_t> bytes_;
};

double DecodeSample(const std::uint8_t* p, std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
      return std::bit_cast<float>(u);
    }
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) u = (u << 8) | p[i];
    return std::bit_cast<double>(u);
  }
  switch (bits) {
    case 16:
      return static_cast<std::int16_t>(p[0] | (p[1] << 8)) / 32768.0;
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32: {
      const auto v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16) |
                                               (static_cast<std::uint32_t>(p[3]) << 24));
      return v / 2147483648.0;
    }
  }
  return 0.0;
}

void Put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8);
}

void Put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

double BesselI0(double x) {
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 50; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace

WavData ParseWav(std::span<const std::uint8_t> bytes) {
  const Reader r(bytes);
  if (r.size() < 12 || r.Tag(0) != "RIFF" || r.Tag(8) != "WAVE") {
    throw IngestionError("wav: not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  bool have_fmt = false;
  std::size_t data_at = 0;
  std::size_t data_len = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= r.size()) {
    const std::string tag = r.Tag(pos);
    const std::size_t len = r.U32(pos + 4);
    const std::size_t body = pos + 8;
    if (tag == "fmt ") {
      format = r.U16(body);
      channels = r.U16(body + 2);
      rate = static_cast<int>(r.U32(body + 4));
      bits = r.U16(body + 14);
      if (format == kFormatExtensible) {
        r.Need(body, 26);
        format = r.U16(body + 24);
      }
      have_fmt = true;
    } else if (tag == "data") {
      data_at = body;
      data_len = std::min(len, r.size() - body);
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || !have_data) throw IngestionError("wav: missing fmt or data chunk");
  const bool pcm_ok = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == kFormatFloat && (bits == 32 || bits == 64);
  if (!pcm_ok && !float_ok) {
    throw IngestionError("wav: unsupported encoding (format " + std::to_string(format) + ", " +
                         std::to_string(bits) + " bits)");
  }
  if (channels < 1 || rate < 1) throw IngestionError("wav: invalid channel count or sample rate");
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = data_len / frame_bytes;
  WavData wav;
  wav.sample_rate = rate;
  wav.channels.assign(channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      wav.channels[c][i] = DecodeSample(r.data() + data_at + i * frame_bytes + c * (bits / 8), format, bits);
    }
  }
  return wav;
}

WavData ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("wav: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return ParseWav(bytes);
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> EncodeWav(const WavData& wav, WavFormat format) {
  if (wav.channels.empty()) throw ValidationError("wav: no channels to write");
  const std::size_t frames = wav.num_samples();
  for (const auto& ch : wav.channels) {
    if (ch.size() != frames) throw ValidationError("wav: channels differ in length");
  }
  const int bits = format == WavFormat::kPcm16 ? 16 : 32;
  const int channels = wav.num_channels();
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * channels * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  PutTag(out, "RIFF");
  Put32(out, 36 + data_len);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  Put32(out, 16);
  Put16(out, format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  Put16(out, static_cast<std::uint16_t>(channels));
  Put32(out, static_cast<std::uint32_t>(wav.sample_rate));
  Put32(out, static_cast<std::uint32_t>(wav.sample_rate * channels * (bits / 8)));
  Put16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  Put16(out, static_cast<std::uint16_t>(bits));
  PutTag(out, "data");
  Put32(out, data_len);
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const double v = wav.channels[c][i];
      if (format == WavFormat::kPcm16) {
        const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        Put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        Put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const WavData& wav, WavFormat format) {
  const auto bytes = EncodeWav(wav, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("wav: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> Resample(std::span<const double> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw ValidationError("resample: rates must be positive");
  if (from_rate == to_rate) return {input.begin(), input.end()};
  const int g = std::gcd(from_rate, to_rate);
  const long up = to_rate / g;
  const long down = from_rate / g;
  const double cutoff = 0.95 * std::min(1.0, static_cast<double>(to_rate) / from_rate);
  constexpr double kHalfWidth = 24.0;  // zero crossings of the prototype per side
  constexpr double kBeta = 8.0;
  const double reach = kHalfWidth / cutoff;
  const double i0_beta = BesselI0(kBeta);
  const std::size_t out_len =
      static_cast<std::size_t>((static_cast<long double>(input.size()) * up + down - 1) / down);
  std::vector<double> out(out_len, 0.0);
  const long n = static_cast<long>(input.size());
  for (std::size_t m = 0; m < out_len; ++m) {
    const double pos = static_cast<double>(static_cast<long double>(m) * down / up);
    const long lo = std::max<long>(0, static_cast<long>(std::ceil(pos - reach)));
    const long hi = std::min<long>(n - 1, static_cast<long>(std::floor(pos + reach)));
    double acc = 0.0;
    for (long k = lo; k <= hi; ++k) {
      const double u = pos - k;
      const double x = cutoff * u;
      const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      const double r = u / reach;
      const double w = BesselI0(kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      acc += input[k] * cutoff * sinc * w;
    }
    out[m] = acc;
  }
  return out;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out.push_back(kB64[(v >> s) & 63]);
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> Base64Decode(const std::string& text) {
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=' || ch == '\n' || ch == '\r' || ch == ' ') continue;
    const char* p = std::strchr(kB64, ch);
    if (p == nullptr || ch == '\0') throw ValidationError("base64: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(p - kB64);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace undf
