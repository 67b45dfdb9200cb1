#pragma once

#include <stdexcept>
#include <string>

namespace vtc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteInput : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct DegenerateSequence : Error {
    using Error::Error;
};

struct EmptyPool : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct OracleMismatch : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

} // namespace vtc
