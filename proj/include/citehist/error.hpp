#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace citehist {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input bytes are not text (binary content, NUL bytes).
class UnreadableInput : public Error {
public:
    using Error::Error;
};

/// The export contained no `PT` record block.
class EmptyExport : public Error {
public:
    EmptyExport() : Error("export contains no records") {}
};

class NoDatedRefs : public Error {
public:
    NoDatedRefs() : Error("no cited reference carries a publication year") {}
};

class EmptySegmentation : public Error {
public:
    EmptySegmentation() : Error("segmentation yields no non-empty citing-year segment") {}
};

class CyclicInput : public Error {
public:
    CyclicInput() : Error("graph contains a cycle; run acyclicize first") {}
};

class UnknownNode : public Error {
public:
    explicit UnknownNode(const std::string& id) : Error("unknown node: " + id) {}
};

class PartitionMismatch : public Error {
public:
    PartitionMismatch() : Error("partition does not assign every node") {}
};

class MalformedReviewFile : public Error {
public:
    MalformedReviewFile(std::size_t line, const std::string& what)
        : Error("review file line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VersionTooNew : public Error {
public:
    VersionTooNew(int found, int supported)
        : Error("project format version " + std::to_string(found) +
                " is newer than supported version " + std::to_string(supported)) {}
};

class CorruptFile : public Error {
public:
    CorruptFile(std::size_t offset, const std::string& what)
        : Error("corrupt project file at byte " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace citehist
