#pragma once

#include <optional>
#include <string_view>

namespace comformer {

inline constexpr int kMaxAtomicNumber = 118;

/// Element symbol for Z in 1..118, empty view otherwise.
std::string_view element_symbol(int atomic_number);

/// Case-sensitive symbol lookup ("Na", "Cl"). Nullopt for unknown symbols.
std::optional<int> atomic_number_from_symbol(std::string_view symbol);

/// Standard atomic weight in g/mol (mass number of the most stable isotope
/// for elements without a standard weight).
double atomic_mass(int atomic_number);

}  // namespace comformer
