/** Emoji markers for placed characters and objects.
 *
 * Keyed by token match against the element name; the fallback glyphs make
 * the mapping total so every placed element gets some marker.
 */

const CHARACTER_EMOJI: [string, string][] = [
  ["wizard", "🧙"],
  ["witch", "🧙"],
  ["king", "👑"],
  ["queen", "👑"],
  ["merchant", "💰"],
  ["trader", "💰"],
  ["peddler", "💰"],
  ["fence", "💰"],
  ["guard", "💂"],
  ["knight", "🛡️"],
  ["shieldmaiden", "🛡️"],
  ["soldier", "💂"],
  ["watchman", "💂"],
  ["priestess", "🕊️"],
  ["acolyte", "🕊️"],
  ["prophet", "🕊️"],
  ["ghost", "👻"],
  ["wolf", "🐺"],
  ["hound", "🐕"],
  ["dog", "🐕"],
  ["cat", "🐈"],
  ["bat", "🦇"],
  ["eagle", "🦅"],
  ["spider", "🕷️"],
  ["salamander", "🦎"],
  ["fisherman", "🎣"],
  ["fishmonger", "🐟"],
  ["smith", "🔨"],
  ["miller", "🌾"],
  ["farmhand", "🌾"],
  ["shepherd", "🐑"],
  ["bard", "🎶"],
  ["jester", "🎭"],
  ["thief", "🗝️"],
  ["urchin", "🧒"],
  ["hunter", "🏹"],
  ["innkeeper", "🍺"],
  ["alchemist", "⚗️"],
  ["herbalist", "🌿"],
];

const OBJECT_EMOJI: [string, string][] = [
  ["sword", "🗡️"],
  ["dagger", "🗡️"],
  ["halberd", "🗡️"],
  ["axe", "🪓"],
  ["bow", "🏹"],
  ["shield", "🛡️"],
  ["candle", "🕯️"],
  ["lantern", "🏮"],
  ["backpack", "🎒"],
  ["pouch", "👝"],
  ["wallet", "👝"],
  ["sack", "👝"],
  ["coin", "🪙"],
  ["jewel", "💎"],
  ["crystal", "💎"],
  ["crown", "👑"],
  ["goblet", "🏆"],
  ["book", "📖"],
  ["spellbook", "📖"],
  ["hymnal", "📖"],
  ["scroll", "📜"],
  ["potion", "🧪"],
  ["alembic", "⚗️"],
  ["herb", "🌿"],
  ["moss", "🌿"],
  ["wolfsbane", "🌿"],
  ["bread", "🍞"],
  ["grain", "🌾"],
  ["flour", "🌾"],
  ["hay", "🌾"],
  ["ale", "🍺"],
  ["mug", "🍺"],
  ["waterskin", "🥤"],
  ["spices", "🧂"],
  ["fish", "🐟"],
  ["rod", "🎣"],
  ["bell", "🔔"],
  ["horn", "📯"],
  ["lute", "🎶"],
  ["whistle", "🎶"],
  ["key", "🗝️"],
  ["lockpick", "🗝️"],
  ["rope", "🧵"],
  ["boot", "🥾"],
  ["hat", "🎩"],
  ["coat", "🧥"],
  ["pelt", "🧥"],
  ["gown", "👗"],
  ["saddle", "🐴"],
  ["anvil", "🔨"],
  ["tongs", "🔨"],
  ["pickaxe", "⛏️"],
  ["shovel", "⛏️"],
  ["scythe", "🌾"],
  ["table", "🪑"],
  ["bed", "🛏️"],
  ["cauldron", "🫕"],
  ["urn", "🏺"],
  ["jar", "🏺"],
  ["crate", "📦"],
  ["basket", "🧺"],
  ["cart", "🛒"],
  ["wheel", "☸️"],
  ["orb", "🔮"],
];

export const CHARACTER_FALLBACK = "🧍";
export const OBJECT_FALLBACK = "📦";

function lookup(name: string, table: [string, string][], fallback: string): string {
  const folded = name.toLowerCase();
  const tokens = folded.split(/[^a-z0-9]+/).filter(Boolean);
  for (const [pattern, glyph] of table) {
    if (tokens.includes(pattern) || folded.includes(pattern)) {
      return glyph;
    }
  }
  return fallback;
}

export function characterEmoji(name: string): string {
  return lookup(name, CHARACTER_EMOJI, CHARACTER_FALLBACK);
}

export function objectEmoji(name: string): string {
  return lookup(name, OBJECT_EMOJI, OBJECT_FALLBACK);
}
