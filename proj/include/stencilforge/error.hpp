#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sf {

struct SourceLoc {
  int line = 0;
  int col = 0;
  bool valid() const { return line > 0; }
};

/// Base of every error thrown by the library. `kind()` is the stable
/// error-class name used in diagnostics and by the CLI exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message, SourceLoc loc = {})
      : std::runtime_error(message), kind_(std::move(kind)), loc_(loc) {}

  const std::string& kind() const { return kind_; }
  SourceLoc loc() const { return loc_; }

  /// True for errors caused by the user's input rather than a broken
  /// internal invariant.
  virtual bool userError() const { return true; }

 private:
  std::string kind_;
  SourceLoc loc_;
};

#define SF_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message, SourceLoc loc = {})  \
        : Error(#Name, message, loc) {}                            \
  };

#define SF_DEFINE_INTERNAL_ERROR(Name)                             \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message, SourceLoc loc = {})  \
        : Error(#Name, message, loc) {}                            \
    bool userError() const override { return false; }              \
  };

// frontend
SF_DEFINE_ERROR(LexError)
SF_DEFINE_ERROR(ParseError)
SF_DEFINE_ERROR(UnsupportedConstruct)
SF_DEFINE_ERROR(LoweringError)
// ir
SF_DEFINE_ERROR(IRParseError)
SF_DEFINE_INTERNAL_ERROR(VerificationError)
// stencil / lowering
SF_DEFINE_ERROR(RankMismatch)
SF_DEFINE_ERROR(NonStencilRead)
SF_DEFINE_ERROR(InvalidTileSize)
SF_DEFINE_ERROR(InvalidProcessGrid)
// pipeline
SF_DEFINE_ERROR(PipelineParseError)
SF_DEFINE_ERROR(UnknownPass)
SF_DEFINE_ERROR(StageOrderError)
SF_DEFINE_ERROR(UsageError)
// runtime
SF_DEFINE_ERROR(TrapOutOfBounds)
SF_DEFINE_ERROR(MissingBinding)
SF_DEFINE_ERROR(GridMismatch)
SF_DEFINE_ERROR(GridFormatError)
SF_DEFINE_INTERNAL_ERROR(DeviceDataMissing)
SF_DEFINE_INTERNAL_ERROR(DeadlockDetected)
SF_DEFINE_INTERNAL_ERROR(RuntimeFault)

#undef SF_DEFINE_ERROR
#undef SF_DEFINE_INTERNAL_ERROR

enum class Severity { Note, Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceLoc loc;
};

inline const char* severityName(Severity s) {
  switch (s) {
    case Severity::Note: return "note";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "error";
}

/// Renders `file:line:col: severity: message`.
inline std::string formatDiagnostic(const std::string& file, const Diagnostic& d) {
  std::string out = file;
  if (d.loc.valid())
    out += ":" + std::to_string(d.loc.line) + ":" + std::to_string(d.loc.col);
  out += ": ";
  out += severityName(d.severity);
  out += ": ";
  out += d.message;
  return out;
}

}  // namespace sf
