#pragma once

#include <stdexcept>
#include <string>

namespace compass {

// Every error raised by the library derives from Error so the CLI can map
// failures onto exit codes in one place.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class UnknownChip : public Error {
public:
    using Error::Error;
};

class UnknownModel : public Error {
public:
    using Error::Error;
};

class CycleError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NotMappable : public Error {
public:
    using Error::Error;
};

// The model cannot be placed on the chip at all (exit code 2 in the CLI).
class UnmappableLayer : public Error {
public:
    using Error::Error;
};

class PackingFailure : public Error {
public:
    using Error::Error;
};

class DegenerateExpectation : public Error {
public:
    using Error::Error;
};

class GlobalMemoryOverflow : public Error {
public:
    GlobalMemoryOverflow(int partition, const std::string& what)
        : Error(what), partition_(partition) {}

    int partition() const noexcept { return partition_; }

private:
    int partition_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace compass
