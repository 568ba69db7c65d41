#pragma once

#include <stdexcept>
#include <string>

namespace spanbench {

// Base for all toolkit errors. `kind()` is stable and used by the CLI to
// pick an exit code: config -> 1, data -> 2, yield -> 3, provider -> 4.
class Error : public std::runtime_error {
public:
  enum class Kind { config, data, yield, provider };

  Error(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(std::string msg) : Error(Kind::config, std::move(msg)) {}
};

struct DataError : Error {
  explicit DataError(std::string msg) : Error(Kind::data, std::move(msg)) {}
};

struct ProviderError : Error {
  int status = 0;
  ProviderError(int status_code, std::string msg)
      : Error(Kind::provider, std::move(msg)), status(status_code) {}
};

struct ProviderUnreachable : Error {
  explicit ProviderUnreachable(std::string msg) : Error(Kind::provider, std::move(msg)) {}
};

// corpus
struct DecodeError : DataError {
  explicit DecodeError(std::string msg) : DataError(std::move(msg)) {}
};
struct EmptyDocument : DataError {
  explicit EmptyDocument(std::string msg) : DataError(std::move(msg)) {}
};
struct SchemaError : DataError {
  int line_no = 0;
  SchemaError(int line, std::string msg) : DataError(std::move(msg)), line_no(line) {}
};
struct SpanMismatch : DataError {
  std::string query_id;
  SpanMismatch(std::string qid, std::string msg)
      : DataError(std::move(msg)), query_id(std::move(qid)) {}
};
struct OutOfBounds : DataError {
  explicit OutOfBounds(std::string msg) : DataError(std::move(msg)) {}
};
struct UnknownDocument : DataError {
  std::string doc_id;
  UnknownDocument(std::string id, std::string msg)
      : DataError(std::move(msg)), doc_id(std::move(id)) {}
};

// chunking
struct InvalidChunkSize : ConfigError {
  explicit InvalidChunkSize(std::string msg) : ConfigError(std::move(msg)) {}
};

// metrics
struct EmptyInput : DataError {
  explicit EmptyInput(std::string msg) : DataError(std::move(msg)) {}
};

// retrieval
struct DimensionMismatch : DataError {
  explicit DimensionMismatch(std::string msg) : DataError(std::move(msg)) {}
};
struct LengthMismatch : DataError {
  explicit LengthMismatch(std::string msg) : DataError(std::move(msg)) {}
};

// synthgen
struct MalformedModelOutput : Error {
  explicit MalformedModelOutput(std::string msg) : Error(Kind::provider, std::move(msg)) {}
};
struct ZeroYield : Error {
  explicit ZeroYield(std::string msg) : Error(Kind::yield, std::move(msg)) {}
};
struct AnchorNotFound : DataError {
  explicit AnchorNotFound(std::string msg) : DataError(std::move(msg)) {}
};

// evaluation / reporting
struct DatasetEmpty : DataError {
  explicit DatasetEmpty(std::string msg) : DataError(std::move(msg)) {}
};
struct EmptyTable : DataError {
  explicit EmptyTable(std::string msg) : DataError(std::move(msg)) {}
};

}  // namespace spanbench
