#pragma once

#include <stdexcept>
#include <string>

namespace lfrr {

// Base class for all library errors. Subclasses mirror the failure modes of
// the public API so callers can catch by kind.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define LFRR_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& msg) : Error(msg) {}     \
    }

LFRR_DEFINE_ERROR(DimensionMismatch);
LFRR_DEFINE_ERROR(ValueOutOfRange);
LFRR_DEFINE_ERROR(IndexOutOfRange);
LFRR_DEFINE_ERROR(ChannelMismatch);
LFRR_DEFINE_ERROR(ShapeMismatch);
LFRR_DEFINE_ERROR(PositionOutOfRange);
LFRR_DEFINE_ERROR(NotScalar);
LFRR_DEFINE_ERROR(NonFiniteGradient);
LFRR_DEFINE_ERROR(NonFiniteLoss);
LFRR_DEFINE_ERROR(NotPlanar);
LFRR_DEFINE_ERROR(EmptyDataset);
LFRR_DEFINE_ERROR(BadMagic);
LFRR_DEFINE_ERROR(BadVersion);
LFRR_DEFINE_ERROR(TruncatedFile);
LFRR_DEFINE_ERROR(DimensionOverflow);
LFRR_DEFINE_ERROR(IoError);
LFRR_DEFINE_ERROR(InvalidConfig);
LFRR_DEFINE_ERROR(ConfigMismatch);

#undef LFRR_DEFINE_ERROR

}  // namespace lfrr
