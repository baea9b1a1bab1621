#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/geometry.hpp"
#include "evres/sensor.hpp"

namespace evres {

namespace detail {

inline void put_u16(std::string& buf, uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
inline uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// EVT1 binary event files (little-endian).
// Header: magic "EVT1", u16 width, u16 height, u64 t_start_ns, u64 t_end_ns,
// u64 count. Records: u64 t_ns, u16 x, u16 y, i8 polarity, u8 pad.
// ---------------------------------------------------------------------------

inline constexpr size_t kEvt1HeaderSize = 32;
inline constexpr size_t kEvt1RecordSize = 14;

struct Evt1Header {
  uint16_t width = 0;
  uint16_t height = 0;
  uint64_t t_start_ns = 0;
  uint64_t t_end_ns = 0;
  uint64_t count = 0;
};

// Streaming writer: events are appended in time order; the header is
// finalized on close().
class Evt1Writer {
public:
  Evt1Writer(const std::string& path, uint16_t width, uint16_t height,
             uint64_t t_start_ns)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    header_.width = width;
    header_.height = height;
    header_.t_start_ns = t_start_ns;
    header_.t_end_ns = t_start_ns;
    write_header();
  }

  ~Evt1Writer() {
    if (out_.is_open()) close(header_.t_end_ns);
  }

  void append(const Event& e) {
    buf_.clear();
    detail::put_u64(buf_, e.t_ns);
    detail::put_u16(buf_, e.x);
    detail::put_u16(buf_, e.y);
    buf_.push_back(static_cast<char>(e.polarity));
    buf_.push_back(0);
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    ++header_.count;
  }

  void append(const std::vector<Event>& events) {
    buf_.clear();
    for (const Event& e : events) {
      detail::put_u64(buf_, e.t_ns);
      detail::put_u16(buf_, e.x);
      detail::put_u16(buf_, e.y);
      buf_.push_back(static_cast<char>(e.polarity));
      buf_.push_back(0);
    }
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    header_.count += events.size();
  }

  void close(uint64_t t_end_ns) {
    header_.t_end_ns = t_end_ns;
    out_.seekp(0);
    write_header();
    out_.close();
    if (!out_) throw IoError("failed to finalize " + path_);
  }

  uint64_t count() const { return header_.count; }

private:
  void write_header() {
    std::string h;
    h += "EVT1";
    detail::put_u16(h, header_.width);
    detail::put_u16(h, header_.height);
    detail::put_u64(h, header_.t_start_ns);
    detail::put_u64(h, header_.t_end_ns);
    detail::put_u64(h, header_.count);
    out_.write(h.data(), static_cast<std::streamsize>(h.size()));
  }

  std::string path_;
  std::ofstream out_;
  Evt1Header header_;
  std::string buf_;
};

inline Evt1Header read_evt1_header(std::istream& in, const std::string& path) {
  std::array<unsigned char, kEvt1HeaderSize> h{};
  in.read(reinterpret_cast<char*>(h.data()), h.size());
  if (in.gcount() != static_cast<std::streamsize>(h.size()))
    throw FormatError(path + ": truncated EVT1 header");
  if (std::memcmp(h.data(), "EVT1", 4) != 0)
    throw FormatError(path + ": bad EVT1 magic");
  Evt1Header out;
  out.width = detail::get_u16(&h[4]);
  out.height = detail::get_u16(&h[6]);
  out.t_start_ns = detail::get_u64(&h[8]);
  out.t_end_ns = detail::get_u64(&h[16]);
  out.count = detail::get_u64(&h[24]);
  return out;
}

inline Evt1Header read_evt1_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_evt1_header(in, path);
}

inline void write_evt1(const std::string& path, const EventStream& stream) {
  Evt1Writer w(path, static_cast<uint16_t>(stream.width),
               static_cast<uint16_t>(stream.height), stream.t_start_ns);
  w.append(stream.events);
  w.close(stream.t_end_ns);
}

// Reads events with t0 <= t < t1 (whole file when t0 >= t1). Events are
// stored sorted, so the scan stops at the first event past the window.
inline EventStream read_evt1(const std::string& path, uint64_t t0_ns = 0,
                             uint64_t t1_ns = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const Evt1Header h = read_evt1_header(in, path);
  const bool windowed = t0_ns < t1_ns;

  EventStream stream;
  stream.width = h.width;
  stream.height = h.height;
  stream.t_start_ns = windowed ? t0_ns : h.t_start_ns;
  stream.t_end_ns = windowed ? t1_ns : h.t_end_ns;
  stream.config.width = h.width;
  stream.config.height = h.height;

  constexpr size_t kChunk = 1 << 16;
  std::vector<unsigned char> buf(kChunk * kEvt1RecordSize);
  uint64_t remaining = h.count;
  uint64_t prev_t = 0;
  while (remaining > 0) {
    const size_t n = static_cast<size_t>(std::min<uint64_t>(remaining, kChunk));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(n * kEvt1RecordSize));
    if (in.gcount() != static_cast<std::streamsize>(n * kEvt1RecordSize))
      throw FormatError(path + ": truncated EVT1 payload");
    for (size_t i = 0; i < n; ++i) {
      const unsigned char* p = &buf[i * kEvt1RecordSize];
      Event e;
      e.t_ns = detail::get_u64(p);
      e.x = detail::get_u16(p + 8);
      e.y = detail::get_u16(p + 10);
      e.polarity = static_cast<int8_t>(p[12]);
      if (e.t_ns < prev_t) throw FormatError(path + ": events not time sorted");
      prev_t = e.t_ns;
      if (e.x >= h.width || e.y >= h.height)
        throw FormatError(path + ": event outside sensor bounds");
      if (windowed) {
        if (e.t_ns >= t1_ns) return stream;
        if (e.t_ns < t0_ns) continue;
      }
      stream.events.push_back(e);
    }
    remaining -= n;
  }
  return stream;
}

inline void write_events_csv(const std::string& path, const EventStream& stream) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t_ns,x,y,p\n";
  for (const Event& e : stream.events)
    out << e.t_ns << ',' << e.x << ',' << e.y << ','
        << static_cast<int>(e.polarity) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// PGM (P5, 8-bit) textures
// ---------------------------------------------------------------------------

// Loads a binary 8-bit PGM as an irradiance frame, E = max(pixel/255, floor).
inline Frame read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError(path + ": not a binary PGM (P5)");
  auto next_token = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw FormatError(path + ": truncated PGM header");
  };
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w <= 0 || h <= 0 || maxval != 255)
    throw FormatError(path + ": unsupported PGM geometry or maxval");
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw FormatError(path + ": truncated PGM payload");
  Frame f(w, h, FrameKind::irradiance);
  for (size_t i = 0; i < raw.size(); ++i)
    f.data[i] = std::max(raw[i] / 255.0, kIrradianceFloor);
  return f;
}

// Writes values clamped to [0, 1] as 8-bit PGM.
inline void write_pgm(const std::string& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << f.width << " " << f.height << "\n255\n";
  std::vector<unsigned char> raw(f.size());
  for (size_t i = 0; i < f.size(); ++i) {
    const double v = std::clamp(f.data[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// FRM1: double-precision frame cache files
// ---------------------------------------------------------------------------

inline void write_frame(const std::string& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  std::string h = "FRM1";
  detail::put_u16(h, static_cast<uint16_t>(f.width));
  detail::put_u16(h, static_cast<uint16_t>(f.height));
  h.push_back(static_cast<char>(f.kind));
  uint64_t ts_bits;
  std::memcpy(&ts_bits, &f.timestamp, 8);
  detail::put_u64(h, ts_bits);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(double)));
  if (!out) throw IoError("failed writing " + path);
}

inline Frame read_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::array<unsigned char, 17> h{};
  in.read(reinterpret_cast<char*>(h.data()), h.size());
  if (in.gcount() != 17 || std::memcmp(h.data(), "FRM1", 4) != 0)
    throw FormatError(path + ": bad FRM1 header");
  const int w = detail::get_u16(&h[4]);
  const int hh = detail::get_u16(&h[6]);
  Frame f(w, hh, static_cast<FrameKind>(h[8]));
  const uint64_t ts_bits = detail::get_u64(&h[9]);
  std::memcpy(&f.timestamp, &ts_bits, 8);
  in.read(reinterpret_cast<char*>(f.data.data()),
          static_cast<std::streamsize>(f.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(f.data.size() * sizeof(double)))
    throw FormatError(path + ": truncated FRM1 payload");
  return f;
}

// ---------------------------------------------------------------------------
// JSON trajectory format
// ---------------------------------------------------------------------------

inline nlohmann::json pose_to_json(const Pose& p) {
  return {{"q", {p.q.w(), p.q.x(), p.q.y(), p.q.z()}},
          {"t", {p.t.x(), p.t.y(), p.t.z()}}};
}

inline Pose pose_from_json(const nlohmann::json& j) {
  if (!j.contains("q") || !j.contains("t") || j["q"].size() != 4 ||
      j["t"].size() != 3)
    throw ConfigError("pose entry needs q[4] (w,x,y,z) and t[3]");
  Pose p;
  p.q = Eigen::Quaterniond(j["q"][0].get<double>(), j["q"][1].get<double>(),
                           j["q"][2].get<double>(), j["q"][3].get<double>());
  if (std::abs(p.q.norm() - 1.0) > 1e-6)
    throw ConfigError("pose quaternion is not unit length");
  p.q.normalize();
  p.t = Eigen::Vector3d(j["t"][0].get<double>(), j["t"][1].get<double>(),
                        j["t"][2].get<double>());
  return p;
}

inline nlohmann::json spline_to_json(const CumulativeBSpline& s) {
  nlohmann::json j;
  j["t0"] = s.t0;
  j["knot_spacing"] = s.knot_spacing;
  j["control_poses"] = nlohmann::json::array();
  for (const Pose& p : s.control_poses) j["control_poses"].push_back(pose_to_json(p));
  return j;
}

inline CumulativeBSpline spline_from_json(const nlohmann::json& j) {
  CumulativeBSpline s;
  if (!j.contains("t0") || !j.contains("knot_spacing") ||
      !j.contains("control_poses"))
    throw ConfigError("trajectory needs t0, knot_spacing, control_poses");
  s.t0 = j["t0"].get<double>();
  s.knot_spacing = j["knot_spacing"].get<double>();
  if (s.knot_spacing <= 0) throw ConfigError("knot_spacing must be positive");
  for (const auto& pj : j["control_poses"])
    s.control_poses.push_back(pose_from_json(pj));
  if (s.size() < 4) throw ConfigError("trajectory needs at least 4 control poses");
  return s;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace evres
