#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqlforge {

enum class ErrorKind {
    EmptyInput,
    InvalidParams,
    DimensionError,
    ProviderError,
    TemplateError,
    CatalogError,
    SeedError,
    IndexError,
    ScoreParseError,
    ConfigError,
    InfrastructureError,
    NoData,
    DegenerateInput,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace sqlforge
