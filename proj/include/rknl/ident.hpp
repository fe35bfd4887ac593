#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace rknl {

// Identifier classes. Source names come from parsed programs; the other
// three are disjoint copies used by the machinery: Overlined names are
// introduced by the decoding of closures, Fresh names by the machine's
// alpha-renaming transition, and LocName turns store locations into
// identifiers for the weak-machine translation.
enum class Space : std::uint8_t { Source, Overlined, Fresh, LocName };

struct Ident {
    Space space = Space::Source;
    std::string base;
    std::optional<std::uint32_t> index;

    friend bool operator==(const Ident&, const Ident&) = default;
    friend auto operator<=>(const Ident&, const Ident&) = default;
};

inline Ident source_ident(std::string base) {
    return Ident{Space::Source, std::move(base), std::nullopt};
}

inline Ident fresh_ident(std::string base, std::uint32_t index) {
    return Ident{Space::Fresh, std::move(base), index};
}

inline Ident overline(const Ident& x) {
    return Ident{Space::Overlined, x.base, x.index};
}

inline Ident loc_ident(std::uint32_t id) {
    return Ident{Space::LocName, std::to_string(id), std::nullopt};
}

// Concrete rendering: fresh names as "z_0", overlined names as "x~",
// location names as "#7".
inline std::string render(const Ident& x) {
    std::string core = x.base;
    if (x.index) {
        core += "_" + std::to_string(*x.index);
    }
    switch (x.space) {
        case Space::LocName:   return "#" + core;
        case Space::Overlined: return core + "~";
        default:               return core;
    }
}

}  // namespace rknl
