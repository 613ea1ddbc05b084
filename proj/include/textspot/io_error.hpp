#pragma once

#include <stdexcept>
#include <string>

namespace textspot {

// File-format failures, each kind distinct so callers (and the CLI's exit
// codes) can tell them apart.
class IoError : public std::runtime_error {
 public:
  enum class Kind {
    MissingFile,
    BadMagic,
    BadVersion,
    Truncated,
    ChannelMismatch,
    BadManifest,
    Schema,
  };

  IoError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::MissingFile: return "missing-file";
      case Kind::BadMagic: return "bad-magic";
      case Kind::BadVersion: return "bad-version";
      case Kind::Truncated: return "truncated";
      case Kind::ChannelMismatch: return "channel-mismatch";
      case Kind::BadManifest: return "bad-manifest";
      case Kind::Schema: return "schema";
    }
    return "unknown";
  }

 private:
  Kind kind_;
};

}  // namespace textspot
