#include "concaps/errors.h"

namespace concaps {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kValidation: return "validation_error";
    case ErrorKind::kIndex: return "index_error";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kFormat: return "format_error";
    case ErrorKind::kContract: return "contract_error";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kLength: return "length_error";
    case ErrorKind::kVocab: return "vocab_error";
    case ErrorKind::kIo: return "io_error";
    case ErrorKind::kNumeric: return "numeric_error";
  }
  return "error";
}

}  // namespace concaps
