// SPDX-License-Identifier: Apache-2.0
#include "dysfl/inventory.hpp"

#include <algorithm>

namespace dysfl {

namespace {

TokenInventory build_english() {
  TokenInventory inv;
  inv.language = Language::English;
  const std::vector<std::string> vowels = {
      "i:", "I",  "e",  "ae", "V",  "A:", "Q",  "O:", "U",  "u:",
      "@",  "3:", "eI", "aI", "OI", "aU", "@U", "I@", "e@", "U@",
  };
  const std::vector<std::string> consonants = {
      "p", "b", "t", "d", "k", "g", "tS", "dZ", "f", "v", "T", "D",
      "s", "z", "S", "Z", "h", "m", "n",  "N",  "l", "r", "j", "w",
  };
  inv.symbols = vowels;
  inv.symbols.insert(inv.symbols.end(), consonants.begin(), consonants.end());
  inv.vowels = vowels;
  inv.vowel_set.insert(vowels.begin(), vowels.end());
  return inv;
}

TokenInventory build_mandarin() {
  TokenInventory inv;
  inv.language = Language::Mandarin;
  // Toneless syllables, one per character. Standalone finals are included;
  // since every syllable ends in a final, all syllables are prolongable.
  inv.symbols = {
      "a",    "ai",   "an",   "ang",  "ao",   "ba",   "bai",  "ban",  "bao",  "bei",
      "ben",  "bi",   "bian", "biao", "bing", "bo",   "bu",   "ca",   "cai",  "can",
      "cao",  "ce",   "cha",  "chang","chao", "che",  "chen", "cheng","chi",  "chong",
      "chu",  "chuan","chun", "ci",   "cong", "cun",  "da",   "dai",  "dan",  "dang",
      "dao",  "de",   "deng", "di",   "dian", "diao", "ding", "dong", "du",   "duan",
      "dui",  "duo",  "e",    "en",   "er",   "fa",   "fan",  "fang", "fei",  "fen",
      "feng", "fu",   "gai",  "gan",  "gang", "gao",  "ge",   "gei",  "gen",  "geng",
      "gong", "gou",  "gu",   "guan", "guang","gui",  "guo",  "ha",   "hai",  "han",
      "hao",  "he",   "hen",  "hong", "hou",  "hu",   "hua",  "huan", "hui",  "huo",
      "ji",   "jia",  "jian", "jiang","jiao", "jie",  "jin",  "jing", "jiu",  "ju",
      "juan", "jue",  "jun",  "ka",   "kai",  "kan",  "kang", "kao",  "ke",   "kong",
      "kou",  "ku",   "kuai", "kun",  "la",   "lai",  "lan",  "lang", "lao",  "le",
      "lei",  "li",   "lian", "liang","liao", "lin",  "ling", "liu",  "long", "lu",
      "luo",  "ma",   "mai",  "man",  "mang", "mao",  "mei",  "men",  "mi",   "mian",
      "miao", "min",  "ming", "mo",   "mu",   "na",   "nai",  "nan",  "nao",  "ne",
      "nei",  "neng", "ni",   "nian", "niao", "ning", "niu",  "nong", "nu",   "nuo",
      "o",    "ou",   "pa",   "pai",  "pan",  "pang", "pao",  "pei",  "pen",  "peng",
      "pi",   "pian", "piao", "pin",  "ping", "po",   "pu",   "qi",   "qian", "qiang",
      "qiao", "qie",  "qin",  "qing", "qiu",  "qu",   "quan", "que",  "qun",  "ran",
      "rang", "rao",  "re",   "ren",  "ri",   "rong", "ru",   "ruo",  "sa",   "sai",
      "san",  "sang", "sao",  "se",   "sha",  "shan", "shang","shao", "she",  "shen",
      "sheng","shi",  "shou", "shu",  "shuang","shui","shuo", "si",   "song", "su",
      "suan", "sui",  "suo",  "ta",   "tai",  "tan",  "tang", "tao",  "te",   "teng",
      "ti",   "tian", "tiao", "ting", "tong", "tou",  "tu",   "tuan", "tui",  "tuo",
      "wa",   "wai",  "wan",  "wang", "wei",  "wen",  "wo",   "wu",   "xi",   "xia",
      "xian", "xiang","xiao", "xie",  "xin",  "xing", "xiong","xiu",  "xu",   "xuan",
      "xue",  "xun",  "ya",   "yan",  "yang", "yao",  "ye",   "yi",   "yin",  "ying",
      "yong", "you",  "yu",   "yuan", "yue",  "yun",  "za",   "zai",  "zan",  "zang",
      "zao",  "ze",   "zen",  "zeng", "zha",  "zhan", "zhang","zhao", "zhe",  "zhen",
      "zheng","zhi",  "zhong","zhou", "zhu",  "zhuan","zhui", "zhuo", "zi",   "zong",
      "zou",  "zu",   "zuan", "zui",  "zun",  "zuo",
  };
  inv.vowels = inv.symbols;
  inv.vowel_set.insert(inv.symbols.begin(), inv.symbols.end());
  return inv;
}

}  // namespace

Token TokenInventory::make_token(const std::string& symbol, u32 word_index) const {
  return Token{symbol, is_vowel(symbol), word_index};
}

void TokenInventory::validate() const {
  if (symbols.empty()) throw DataError("token inventory has no symbols");
  if (vowels.empty()) throw DataError("token inventory has no vowels");
  if (vowel_set.size() != vowels.size()) {
    throw DataError("inventory vowel list contains duplicates");
  }
  for (const auto& v : vowels) {
    if (std::find(symbols.begin(), symbols.end(), v) == symbols.end()) {
      throw DataError("inventory vowel '" + v + "' not in symbol list");
    }
  }
}

const TokenInventory& TokenInventory::english() {
  static const TokenInventory inv = build_english();
  return inv;
}

const TokenInventory& TokenInventory::mandarin() {
  static const TokenInventory inv = build_mandarin();
  return inv;
}

const TokenInventory& TokenInventory::for_language(Language lang) {
  return lang == Language::English ? english() : mandarin();
}

}  // namespace dysfl
