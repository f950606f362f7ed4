#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "policylens/error.hpp"
#include "policylens/numfmt.hpp"

namespace policylens {

/// The four CCLW policy themes. The enum order is the canonical storage
/// order used for count arrays and model heads.
enum class Theme : int {
    Mitigation = 0,
    Adaptation = 1,
    DisasterRiskManagement = 2,
    LossAndDamage = 3,
};

inline constexpr int kThemeCount = 4;

inline const std::array<std::string, kThemeCount> kThemeNames = {
    "Mitigation",
    "Adaptation",
    "Disaster Risk Management",
    "Loss and Damage",
};

/// Row order used by report tables (alphabetical by display name).
inline constexpr std::array<Theme, kThemeCount> kReportThemeOrder = {
    Theme::Adaptation,
    Theme::DisasterRiskManagement,
    Theme::LossAndDamage,
    Theme::Mitigation,
};

inline const std::string& theme_name(Theme t) { return kThemeNames[static_cast<int>(t)]; }

/// A subset of the four themes. Multi-label: any combination is legal,
/// including the empty set.
class ThemeSet {
public:
    ThemeSet() = default;

    bool contains(Theme t) const { return (bits_ >> static_cast<int>(t)) & 1u; }
    void add(Theme t) { bits_ |= 1u << static_cast<int>(t); }
    void remove(Theme t) { bits_ &= ~(1u << static_cast<int>(t)); }
    bool empty() const { return bits_ == 0; }

    int size() const {
        int n = 0;
        for (int k = 0; k < kThemeCount; ++k) n += (bits_ >> k) & 1u;
        return n;
    }

    std::uint8_t bits() const { return bits_; }

    friend bool operator==(ThemeSet a, ThemeSet b) { return a.bits_ == b.bits_; }
    friend bool operator!=(ThemeSet a, ThemeSet b) { return a.bits_ != b.bits_; }

    /// Parses a pipe-separated label cell ("Adaptation|Loss and Damage").
    /// An empty cell is the empty set. Unknown labels throw.
    static ThemeSet parse(std::string_view cell) {
        ThemeSet out;
        size_t start = 0;
        while (start <= cell.size()) {
            size_t bar = cell.find('|', start);
            if (bar == std::string_view::npos) bar = cell.size();
            std::string_view piece = trim(cell.substr(start, bar - start));
            if (!piece.empty()) {
                bool known = false;
                for (int k = 0; k < kThemeCount; ++k) {
                    if (piece == kThemeNames[k]) {
                        out.add(static_cast<Theme>(k));
                        known = true;
                        break;
                    }
                }
                if (!known)
                    throw Error("unknown theme label '" + std::string(piece) + "'");
            }
            if (bar == cell.size()) break;
            start = bar + 1;
        }
        return out;
    }

    /// Pipe-separated cell in canonical theme order; empty set -> "".
    std::string to_cell() const {
        std::string out;
        for (int k = 0; k < kThemeCount; ++k) {
            if (!contains(static_cast<Theme>(k))) continue;
            if (!out.empty()) out += '|';
            out += kThemeNames[k];
        }
        return out;
    }

private:
    std::uint8_t bits_ = 0;
};

/// Country-year policy counts per theme: the quantitative policy variables
/// that the statistical half of the pipeline consumes.
struct ThemePanel {
    struct Cell {
        std::string country_iso3;
        int year = 0;
        std::array<int, kThemeCount> counts{};
    };

    /// Unique (country, year) keys, sorted ascending.
    std::vector<Cell> cells;

    const Cell* find(std::string_view iso3, int year) const {
        for (const auto& c : cells)
            if (c.country_iso3 == iso3 && c.year == year) return &c;
        return nullptr;
    }
};

}
