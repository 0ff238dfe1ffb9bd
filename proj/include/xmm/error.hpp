#pragma once

#include <stdexcept>
#include <string>

namespace xmm {

// Every data error carries a stable name (e.g. "ZeroVector") so callers such
// as the CLI can report it verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& detail)
      : std::runtime_error(name + ": " + detail), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define XMM_DEFINE_ERROR(Type)                                   \
  class Type : public Error {                                    \
   public:                                                       \
    explicit Type(const std::string& detail) : Error(#Type, detail) {} \
  };

XMM_DEFINE_ERROR(ZeroVector)
XMM_DEFINE_ERROR(ParseError)
XMM_DEFINE_ERROR(DimMismatch)
XMM_DEFINE_ERROR(IoError)
XMM_DEFINE_ERROR(InvalidConfig)
XMM_DEFINE_ERROR(NoClusters)
XMM_DEFINE_ERROR(EmptyCluster)
XMM_DEFINE_ERROR(SlotOutOfRange)
XMM_DEFINE_ERROR(MissingLabel)
XMM_DEFINE_ERROR(EmptyBatch)
XMM_DEFINE_ERROR(ScaleMismatch)
XMM_DEFINE_ERROR(EmptyMatch)
XMM_DEFINE_ERROR(MissingIds)
XMM_DEFINE_ERROR(NoPositivePairs)

#undef XMM_DEFINE_ERROR

}  // namespace xmm
