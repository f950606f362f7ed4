#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace policylens::uni {

/// Decodes the UTF-8 sequence starting at text[i], advancing i past it.
/// Malformed bytes decode to U+FFFD one byte at a time.
inline char32_t decode(std::string_view text, size_t& i) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++i; return 0xFFFD; }
    if (i + len > text.size()) { ++i; return 0xFFFD; }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(text[i + k]);
        if ((b & 0xC0) != 0x80) { ++i; return 0xFFFD; }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

/// Approximate Unicode word class: ASCII alphanumerics plus the common
/// letter blocks. Symbol, punctuation, and combining-mark blocks are out.
inline bool is_word(char32_t cp) {
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
    if (cp < 0xC0) return false;                       // Latin-1 punctuation and signs
    if (cp == 0xD7 || cp == 0xF7) return false;        // multiplication / division signs
    if (cp < 0x2B0) return true;                       // Latin-1 letters + Latin Extended A/B + IPA
    if (cp < 0x370) return false;                      // modifier letters, combining marks
    if (cp < 0x2000) return true;                      // Greek, Cyrillic, Armenian, Hebrew, Arabic, Indic, ...
    if (cp >= 0x3040 && cp < 0x3100) return true;      // kana
    if (cp >= 0x3400 && cp < 0xA000) return true;      // CJK ideographs
    if (cp >= 0xAC00 && cp < 0xD7B0) return true;      // Hangul syllables
    if (cp >= 0xF900 && cp < 0xFB00) return true;      // CJK compatibility
    return false;
}

/// Case folding for the scripts covered above; identity elsewhere.
inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;   // Latin-1 capitals
    if (cp == 0x178) return 0xFF;                                   // Y with diaeresis
    if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177))
        return (cp % 2 == 0) ? cp + 1 : cp;                         // Latin Extended-A pairs
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E))
        return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20; // Greek capitals
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                // Cyrillic capitals
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

}
