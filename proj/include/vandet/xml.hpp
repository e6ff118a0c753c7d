#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vandet {

/// Abstract byte stream; read returns 0 at end of input.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::size_t read(char* buf, std::size_t n) = 0;
};

class StringSource final : public ByteSource {
 public:
  explicit StringSource(std::string data) : data_(std::move(data)) {}
  std::size_t read(char* buf, std::size_t n) override;

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path);
  ~FileSource() override;
  std::size_t read(char* buf, std::size_t n) override;

 private:
  std::FILE* file_;
};

/// Inflates a gzip stream from an inner source.
class GzipSource final : public ByteSource {
 public:
  explicit GzipSource(std::unique_ptr<ByteSource> inner);
  ~GzipSource() override;
  std::size_t read(char* buf, std::size_t n) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Opens a file, transparently inflating it when the gzip magic bytes are
/// present.
std::unique_ptr<ByteSource> open_source(const std::filesystem::path& path);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::uint64_t byte_offset);
  std::uint64_t byte_offset() const { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

struct XmlEvent {
  enum class Kind { StartElement, EndElement, Text, EndOfDocument };
  Kind kind;
  std::string value;  // element name or text chunk
};

/// Pull parser for the XML subset used by revision-history dumps: elements,
/// attributes (skipped), character data with the standard entities, CDATA,
/// comments and processing instructions. Documents must have a single root.
/// Byte offsets refer to the (decompressed) input stream.
class XmlReader {
 public:
  explicit XmlReader(std::unique_ptr<ByteSource> source);

  /// Returns the next event; throws ParseError on malformed input. Text is
  /// coalesced so that consecutive character data inside one element arrives
  /// as a single event.
  XmlEvent next();

  std::uint64_t byte_offset() const { return offset_ - buffer_.size() + pos_; }

 private:
  int peek();
  int get();
  void refill();
  [[noreturn]] void fail(const std::string& message) const;
  void expect(char c);
  void skip_whitespace();
  std::string read_name();
  void skip_until(std::string_view terminator);
  void decode_entity(std::string& out);
  XmlEvent read_markup();

  std::unique_ptr<ByteSource> source_;
  std::string buffer_;
  std::size_t pos_ = 0;
  std::uint64_t offset_ = 0;  // bytes consumed from source into buffer_
  bool eof_ = false;
  std::vector<std::string> open_elements_;
  bool root_seen_ = false;
  bool pending_end_ = false;  // self-closing tag: End event queued
  std::string pending_name_;
};

}  // namespace vandet
