#pragma once

#include <stdexcept>
#include <string>

namespace cagan {

// Every failure raised by the library derives from Error. kind() is the
// stable machine-readable name printed by the CLI on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CAGAN_DEFINE_ERROR(Name)                                        \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

CAGAN_DEFINE_ERROR(IoError)
CAGAN_DEFINE_ERROR(MaskFileMissing)
CAGAN_DEFINE_ERROR(MaskShapeError)
CAGAN_DEFINE_ERROR(ShapeError)
CAGAN_DEFINE_ERROR(IndexError)
CAGAN_DEFINE_ERROR(PadError)
CAGAN_DEFINE_ERROR(SplitError)
CAGAN_DEFINE_ERROR(ConfigError)
CAGAN_DEFINE_ERROR(ManifestError)
CAGAN_DEFINE_ERROR(NumericalError)
CAGAN_DEFINE_ERROR(StageError)
CAGAN_DEFINE_ERROR(DataError)
CAGAN_DEFINE_ERROR(DivergedError)
CAGAN_DEFINE_ERROR(CheckpointError)
CAGAN_DEFINE_ERROR(IntegrityError)
CAGAN_DEFINE_ERROR(MatrixError)
CAGAN_DEFINE_ERROR(NullSpaceEmpty)

#undef CAGAN_DEFINE_ERROR

}  // namespace cagan
