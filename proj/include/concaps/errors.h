#ifndef CONCAPS_ERRORS_H_
#define CONCAPS_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace concaps {

// Every failure the library reports is an Error tagged with one of these
// kinds. The CLI turns the kind into a machine-readable error code.
enum class ErrorKind {
  kParse,
  kValidation,
  kIndex,
  kNotFound,
  kFormat,
  kContract,
  kConfig,
  kLength,
  kVocab,
  kIo,
  kNumeric,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace concaps

#endif  // CONCAPS_ERRORS_H_
