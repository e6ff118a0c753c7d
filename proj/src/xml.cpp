#include "vandet/xml.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>

namespace vandet {

namespace {
constexpr std::size_t kChunkSize = 1 << 16;

bool is_xml_space(int c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

bool is_name_start(int c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c == ':';
}

bool is_name_char(int c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}
}  // namespace

std::size_t StringSource::read(char* buf, std::size_t n) {
  const std::size_t take = std::min(n, data_.size() - pos_);
  std::memcpy(buf, data_.data() + pos_, take);
  pos_ += take;
  return take;
}

FileSource::FileSource(const std::filesystem::path& path)
    : file_(std::fopen(path.c_str(), "rb")) {
  if (!file_)
    throw std::runtime_error("cannot open " + path.string());
}

FileSource::~FileSource() {
  if (file_) std::fclose(file_);
}

std::size_t FileSource::read(char* buf, std::size_t n) {
  return std::fread(buf, 1, n, file_);
}

struct GzipSource::Impl {
  std::unique_ptr<ByteSource> inner;
  z_stream strm{};
  char in[kChunkSize];
  bool input_done = false;
  bool stream_done = false;
};

GzipSource::GzipSource(std::unique_ptr<ByteSource> inner)
    : impl_(std::make_unique<Impl>()) {
  impl_->inner = std::move(inner);
  // 15+16: zlib window with gzip header detection.
  if (inflateInit2(&impl_->strm, 15 + 16) != Z_OK)
    throw std::runtime_error("inflateInit2 failed");
}

GzipSource::~GzipSource() { inflateEnd(&impl_->strm); }

std::size_t GzipSource::read(char* buf, std::size_t n) {
  if (impl_->stream_done) return 0;
  z_stream& strm = impl_->strm;
  strm.next_out = reinterpret_cast<Bytef*>(buf);
  strm.avail_out = static_cast<uInt>(n);
  while (strm.avail_out > 0) {
    if (strm.avail_in == 0 && !impl_->input_done) {
      const std::size_t got = impl_->inner->read(impl_->in, kChunkSize);
      strm.next_in = reinterpret_cast<Bytef*>(impl_->in);
      strm.avail_in = static_cast<uInt>(got);
      if (got == 0) impl_->input_done = true;
    }
    const int rc = inflate(&strm, impl_->input_done ? Z_FINISH : Z_NO_FLUSH);
    if (rc == Z_STREAM_END) {
      impl_->stream_done = true;
      break;
    }
    if (rc != Z_OK && rc != Z_BUF_ERROR)
      throw std::runtime_error("gzip decompression failed");
    if (rc == Z_BUF_ERROR && impl_->input_done)
      throw std::runtime_error("truncated gzip stream");
  }
  return n - strm.avail_out;
}

std::unique_ptr<ByteSource> open_source(const std::filesystem::path& path) {
  {
    FileSource probe(path);
    char magic[2] = {0, 0};
    const std::size_t got = probe.read(magic, 2);
    if (got == 2 && static_cast<unsigned char>(magic[0]) == 0x1f &&
        static_cast<unsigned char>(magic[1]) == 0x8b)
      return std::make_unique<GzipSource>(std::make_unique<FileSource>(path));
  }
  return std::make_unique<FileSource>(path);
}

ParseError::ParseError(const std::string& message, std::uint64_t byte_offset)
    : std::runtime_error(message + " at byte " + std::to_string(byte_offset)),
      byte_offset_(byte_offset) {}

XmlReader::XmlReader(std::unique_ptr<ByteSource> source)
    : source_(std::move(source)) {}

void XmlReader::refill() {
  if (eof_ || pos_ < buffer_.size()) return;
  buffer_.resize(kChunkSize);
  const std::size_t got = source_->read(buffer_.data(), kChunkSize);
  buffer_.resize(got);
  pos_ = 0;
  offset_ += got;
  if (got == 0) eof_ = true;
}

int XmlReader::peek() {
  refill();
  if (pos_ >= buffer_.size()) return -1;
  return static_cast<unsigned char>(buffer_[pos_]);
}

int XmlReader::get() {
  const int c = peek();
  if (c >= 0) ++pos_;
  return c;
}

void XmlReader::fail(const std::string& message) const {
  throw ParseError(message, byte_offset());
}

void XmlReader::expect(char c) {
  const int got = get();
  if (got != c)
    fail(std::string("expected '") + c + "'");
}

void XmlReader::skip_whitespace() {
  while (is_xml_space(peek())) get();
}

std::string XmlReader::read_name() {
  std::string name;
  if (!is_name_start(peek())) fail("expected element name");
  while (is_name_char(peek())) name.push_back(static_cast<char>(get()));
  return name;
}

void XmlReader::skip_until(std::string_view terminator) {
  std::string window;
  while (window != terminator) {
    const int c = get();
    if (c < 0) fail("unexpected end of input");
    window.push_back(static_cast<char>(c));
    if (window.size() > terminator.size()) window.erase(window.begin());
  }
}

void XmlReader::decode_entity(std::string& out) {
  // '&' already consumed.
  std::string name;
  for (int i = 0; i < 12; ++i) {
    const int c = get();
    if (c < 0) fail("unterminated entity reference");
    if (c == ';') {
      if (name == "lt") out.push_back('<');
      else if (name == "gt") out.push_back('>');
      else if (name == "amp") out.push_back('&');
      else if (name == "apos") out.push_back('\'');
      else if (name == "quot") out.push_back('"');
      else if (name.size() > 1 && name[0] == '#') {
        char* end = nullptr;
        const bool hex = name[1] == 'x' || name[1] == 'X';
        const unsigned long cp =
            std::strtoul(name.c_str() + (hex ? 2 : 1), &end, hex ? 16 : 10);
        if (*end != '\0' || cp == 0 || cp > 0x10FFFF)
          fail("invalid character reference '&" + name + ";'");
        // Encode codepoint as UTF-8.
        if (cp < 0x80) {
          out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
          out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
          out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
          out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
          out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
          out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
          out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
      } else {
        fail("unknown entity '&" + name + ";'");
      }
      return;
    }
    name.push_back(static_cast<char>(c));
  }
  fail("unterminated entity reference");
}

XmlEvent XmlReader::read_markup() {
  // Positioned just after '<'.
  int c = peek();
  if (c == '?') {
    get();
    skip_until("?>");
    return XmlEvent{XmlEvent::Kind::Text, ""};  // caller loops
  }
  if (c == '!') {
    get();
    if (peek() == '-') {
      expect('-');
      expect('-');
      skip_until("-->");
      return XmlEvent{XmlEvent::Kind::Text, ""};
    }
    if (peek() == '[') {
      // <![CDATA[ ... ]]>
      for (const char k : std::string_view("[CDATA[")) expect(k);
      std::string data;
      while (!data.ends_with("]]>")) {
        const int d = get();
        if (d < 0) fail("unterminated CDATA section");
        data.push_back(static_cast<char>(d));
      }
      data.resize(data.size() - 3);
      return XmlEvent{XmlEvent::Kind::Text, std::move(data)};
    }
    // DOCTYPE and friends: skip to the closing '>'.
    skip_until(">");
    return XmlEvent{XmlEvent::Kind::Text, ""};
  }
  if (c == '/') {
    get();
    const std::string name = read_name();
    skip_whitespace();
    expect('>');
    if (open_elements_.empty())
      fail("closing tag </" + name + "> with no open element");
    if (open_elements_.back() != name)
      fail("mismatched closing tag </" + name + ">, expected </" +
           open_elements_.back() + ">");
    open_elements_.pop_back();
    return XmlEvent{XmlEvent::Kind::EndElement, name};
  }

  // Start tag.
  const std::string name = read_name();
  if (open_elements_.empty() && root_seen_)
    fail("second root element <" + name + ">");
  while (true) {
    skip_whitespace();
    c = peek();
    if (c < 0) fail("unterminated start tag <" + name + ">");
    if (c == '>') {
      get();
      open_elements_.push_back(name);
      root_seen_ = true;
      return XmlEvent{XmlEvent::Kind::StartElement, name};
    }
    if (c == '/') {
      get();
      expect('>');
      pending_end_ = true;
      pending_name_ = name;
      root_seen_ = true;
      return XmlEvent{XmlEvent::Kind::StartElement, name};
    }
    // Attribute: name="value" (value skipped).
    read_name();
    skip_whitespace();
    expect('=');
    skip_whitespace();
    const int quote = get();
    if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
    while (true) {
      const int d = get();
      if (d < 0) fail("unterminated attribute value");
      if (d == quote) break;
    }
  }
}

XmlEvent XmlReader::next() {
  if (pending_end_) {
    pending_end_ = false;
    return XmlEvent{XmlEvent::Kind::EndElement, std::move(pending_name_)};
  }
  std::string text;
  const bool in_element = !open_elements_.empty();
  while (true) {
    const int c = peek();
    if (c < 0) {
      if (!open_elements_.empty())
        fail("unexpected end of input inside <" + open_elements_.back() + ">");
      if (!root_seen_) fail("no root element");
      return XmlEvent{XmlEvent::Kind::EndOfDocument, ""};
    }
    if (c == '<') {
      if (in_element && !text.empty())
        return XmlEvent{XmlEvent::Kind::Text, std::move(text)};
      get();
      XmlEvent ev = read_markup();
      if (ev.kind == XmlEvent::Kind::Text) {
        if (ev.value.empty()) continue;  // comment / PI / doctype
        if (open_elements_.empty())
          fail("character data outside the root element");
        text += ev.value;  // CDATA joins surrounding text
        continue;
      }
      return ev;
    }
    if (open_elements_.empty()) {
      if (!is_xml_space(c)) fail("character data outside the root element");
      get();
      continue;
    }
    if (c == '&') {
      get();
      decode_entity(text);
      continue;
    }
    text.push_back(static_cast<char>(get()));
  }
}

}  // namespace vandet
