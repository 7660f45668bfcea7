#include <algorithm>
#include <cctype>

#include "scog/sft/segment.hpp"

namespace scog::sft {

namespace {

constexpr const char* kLemmas[] = {
    "accept", "accompany", "accuse", "achieve", "acquire", "act", "add", "address", "admire",
    "admit", "adopt", "advise", "agree", "aid", "aim", "alert", "allow", "announce", "answer",
    "appear", "applaud", "apply", "appoint", "approach", "approve", "argue", "arrange", "arrest",
    "arrive", "ask", "assemble", "assign", "assist", "attach", "attack", "attempt", "attend",
    "attract", "auction", "award", "bake", "ban", "bargain", "battle", "beg", "believe", "belong",
    "betray", "blame", "bless", "block", "board", "boast", "borrow", "bounce", "bow", "brew",
    "broadcast", "burn", "bury", "call", "calm", "capture", "carry", "carve", "cast", "catalog",
    "celebrate", "challenge", "change", "charge", "chase", "cheer", "chart", "choreograph",
    "claim", "clean", "clear", "climb", "close", "collaborate", "collect", "combine", "command",
    "commission", "compete", "complete", "compose", "conceal", "conclude", "conduct", "confess",
    "confirm", "confront", "connect", "consult", "contain", "continue", "contribute", "convince",
    "copy", "correct", "count", "craft", "crash", "create", "cross", "crown", "cultivate", "cure",
    "dance", "decide", "declare", "decode", "decorate", "defeat", "defend", "deliver", "demand",
    "demonstrate", "deny", "depart", "deploy", "describe", "design", "destroy", "detect",
    "develop", "devise", "direct", "disappear", "discover", "discuss", "display", "dispatch",
    "donate", "download", "drag", "earn", "educate", "embrace", "emerge", "employ", "enable",
    "encounter", "encourage", "end", "endorse", "engineer", "enjoy", "enter", "entertain",
    "entrust", "escape", "escort", "establish", "evacuate", "evaluate", "examine", "exchange",
    "excavate", "execute", "exhibit", "expand", "expect", "explain", "explore", "export",
    "expose", "express", "extend", "fail", "fetch", "file", "fill", "finance", "finish", "fix",
    "follow", "force", "forge", "form", "found", "free", "fund", "gather", "gift", "glance",
    "grab", "graduate", "grant", "greet", "guarantee", "handle", "happen", "harvest", "hatch",
    "heal", "help", "hire", "hope", "hug", "hunt", "hurry", "identify", "ignore", "illustrate",
    "imagine", "import", "impress", "improve", "include", "inform", "inherit", "inspect",
    "inspire", "install", "instruct", "intend", "interview", "introduce", "invent",
    "investigate", "invite", "involve", "join", "joke", "jump", "kick", "kill", "kiss", "knock",
    "label", "land", "launch", "learn", "lend", "liberate", "lift", "like", "link", "listen",
    "live", "load", "locate", "lock", "look", "love", "maintain", "manage", "manufacture", "map",
    "marry", "measure", "mediate", "mend", "mention", "migrate", "mix", "move", "name",
    "narrate", "navigate", "need", "negotiate", "nominate", "notice", "obey", "observe",
    "obtain", "occupy", "offer", "open", "operate", "order", "organize", "organise", "owe", "own",
    "paint", "pass", "perform", "persuade", "pick", "pitch", "place", "plan", "plant", "play",
    "please", "plead", "point", "polish", "pour", "pray", "predict", "prefer", "prepare",
    "present", "preserve", "prevent", "print", "proceed", "produce", "program", "promise",
    "promote", "propose", "protect", "protest", "prove", "provide", "publish", "pull", "punish",
    "purchase", "push", "question", "race", "raise", "reach", "realize", "receive",
    "recognize", "recommend", "record", "recover", "recruit", "reduce", "refuse", "register",
    "reject", "rejoice", "relax", "release", "remain", "remember", "remind", "remove", "renovate",
    "rent", "repair", "repeat", "replace", "reply", "report", "represent", "request", "rescue",
    "research", "reserve", "resign", "resolve", "respond", "rest", "restore", "retire",
    "retrieve", "return", "reveal", "review", "reward", "ride", "rob", "roll", "rule", "rush",
    "sail", "salute", "save", "scan", "schedule", "scold", "score", "scream", "search", "secure",
    "select", "serve", "settle", "share", "shelter", "ship", "shout", "sign", "signal", "ski",
    "smile", "solve", "sort", "spark", "sponsor", "spot", "stage", "start", "stay", "step",
    "stop", "store", "study", "submit", "succeed", "suggest", "supervise", "supply", "support",
    "surprise", "surround", "survey", "survive", "suspect", "talk", "tame", "taste", "test",
    "thank", "touch", "tour", "trace", "trade", "train", "transfer", "transform", "translate",
    "transport", "travel", "treat", "trust", "try", "turn", "uncover", "undergo", "unite",
    "unlock", "unveil", "update", "use", "vanish", "venture", "verify", "visit", "volunteer",
    "vote", "wait", "walk", "want", "warn", "wash", "watch", "welcome", "whisper", "wish",
    "wonder", "work", "worry", "wrap",
};

// Lemmas with irregular past forms; their -s and -ing forms are regular, but
// no regular -ed form exists ("seed" is not a form of "see").
constexpr const char* kStrongLemmas[] = {
    "arise", "awake", "be", "bear", "beat", "become", "begin", "bend", "bet", "bid", "bind",
    "bite", "blow", "break", "breed", "bring", "build", "burst", "buy", "catch", "choose",
    "come", "cost", "creep", "cut", "deal", "dig", "do", "draw", "dream", "drink", "drive", "eat",
    "fall", "feed", "feel", "fight", "find", "flee", "fling", "fly", "forbid", "forecast",
    "forget", "forgive", "freeze", "get", "give", "go", "grind", "grow", "hang", "have", "hear",
    "hide", "hit", "hold", "hurt", "keep", "kneel", "know", "lay", "lead", "leap", "leave",
    "let", "lie", "light", "lose", "make", "mean", "meet", "mistake", "overcome", "oversee",
    "overtake", "pay", "prove", "put", "quit", "read", "rid", "ring", "rise", "run", "say", "see",
    "seek", "sell", "send", "set", "sew", "shake", "shine", "shoot", "show", "shut", "sing",
    "sink", "sit", "sleep", "slide", "sling", "speak", "speed", "spend", "spin", "split",
    "spread", "spring", "stand", "steal", "stick", "sting", "strike", "strive", "swear",
    "sweep", "swim", "swing", "take", "teach", "tear", "tell", "think", "throw", "understand",
    "undertake", "upset", "wake", "wear", "weave", "weep", "win", "wind", "withdraw", "write",
};

constexpr const char* kIrregular[] = {
    "arose", "arisen", "awoke", "awoken", "bore", "borne", "beat", "beaten", "became", "began",
    "begun", "bent", "bid", "bound", "bit", "bitten", "blew", "blown", "broke", "broken", "bred",
    "brought", "built", "burst", "bought", "caught", "chose", "chosen", "came", "cost", "crept",
    "cut", "dealt", "dug", "drew", "drawn", "dreamt", "drank", "drunk", "drove", "driven", "ate",
    "eaten", "fell", "fallen", "fed", "felt", "fought", "found", "fled", "flung", "flew", "flown",
    "forbade", "forbidden", "forecast", "forgot", "forgotten", "forgave", "forgiven", "froze",
    "frozen", "got", "gotten", "gave", "given", "went", "gone", "ground", "grew", "grown", "hung",
    "heard", "hid", "hidden", "hit", "held", "hurt", "kept", "knelt", "knew", "known", "laid",
    "led", "leapt", "left", "let", "lay", "lain", "lit", "lost", "made", "meant", "met",
    "mistook", "mistaken", "overcame", "oversaw", "overseen", "overtook", "overtaken", "paid",
    "proven", "put", "quit", "read", "rid", "rang", "rung", "rose", "risen", "ran", "said", "saw",
    "seen", "sought", "sold", "sent", "set", "sewn", "shook", "shaken", "shone", "shot",
    "showed", "shown", "shut", "sang", "sung", "sank", "sunk", "sat", "slept", "slid", "slung",
    "spoke", "spoken", "sped", "spent", "spun", "split", "spread", "sprang", "sprung", "stood",
    "stole", "stolen", "stuck", "stung", "struck", "strove", "striven", "swore", "sworn",
    "swept", "swam", "swum", "swung", "took", "taken", "taught", "tore", "torn", "told",
    "thought", "threw", "thrown", "understood", "undertook", "undertaken", "upset", "woke",
    "woken", "wore", "worn", "wove", "woven", "wept", "won", "wound", "withdrew", "withdrawn",
    "wrote", "written", "underwent", "undergone", "dreamed", "proved", "lighted", "sped",
    "knitted", "wetted", "showed",
};

constexpr const char* kAuxiliaries[] = {
    "am", "is", "are", "was", "were", "be", "been", "being", "has", "have", "had", "having",
    "do", "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might",
    "must",
};

constexpr const char* kNounLike[] = {
    "star", "film", "guard", "judge", "pilot", "host", "coach", "nurse", "referee", "captain",
    "guide", "cook", "witness", "mentor", "doctor", "model", "chair", "record", "report",
    "place", "name", "plan", "board", "cast", "design", "display", "file", "form", "found",
    "gift", "label", "land", "map", "order", "present", "program", "question", "race", "rest",
    "review", "rule", "ship", "sign", "signal", "stage", "store", "study", "support", "survey",
    "test", "tour", "trade", "train", "travel", "visit", "work", "watch", "light", "lead",
    "cross", "dance", "engineer", "escort", "exhibit", "export", "import", "interview", "offer",
    "paint", "play", "point", "protest", "purchase", "request", "research", "reward", "score",
    "search", "shelter", "spot", "spring", "stand", "step", "stick", "swing", "taste", "wind",
    "wonder", "crown", "auction", "catalog", "chart", "craft", "fund", "hunt", "mix", "volunteer",
    "harvest", "battle", "challenge", "change", "charge", "command", "commission", "contract",
    "deal", "dream", "end", "fall", "fight", "hope", "lie", "love", "need", "pass", "pitch",
    "bow", "blame", "call", "claim", "close", "count", "demand", "draw", "aim", "act", "aid",
    "plant", "release", "return", "ride", "rise", "sail", "set", "share", "show",
    "smile", "start", "stay", "stop", "strike", "talk", "touch", "treat", "trust", "turn",
    "use", "vote", "wait", "walk", "wish", "wrap", "transport", "transfer", "supply", "update",
    "escape", "hire", "joke", "kick", "kiss", "knock", "lift", "link", "load", "lock", "look",
    "measure", "polish", "pull", "push", "rent", "repair", "rescue", "scan", "scream", "shout",
    "ski", "spark", "sort", "sponsor", "hug", "jump", "cure", "mend", "estimate",
};

constexpr const char* kDeterminers[] = {
    "a", "an", "the", "this", "that", "these", "those", "his", "her", "its", "their", "our",
    "my", "your", "every", "each", "some", "any", "no", "several", "many", "few", "another",
};

template <std::size_t N>
std::set<std::string> to_set(const char* const (&words)[N]) {
  return std::set<std::string>(std::begin(words), std::end(words));
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

}  // namespace

const VerbLexicon& VerbLexicon::builtin() {
  static const VerbLexicon lexicon{"scog-verbs-1",        to_set(kLemmas),
                                   to_set(kStrongLemmas),  to_set(kIrregular),
                                   to_set(kAuxiliaries),   to_set(kNounLike),
                                   to_set(kDeterminers)};
  return lexicon;
}

bool VerbLexicon::is_verb(std::string_view raw) const {
  std::string w(raw);
  std::transform(w.begin(), w.end(), w.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (w.empty()) return false;
  if (auxiliaries.count(w) || irregular_forms.count(w)) return true;
  auto weak = [&](const std::string& s) {
    return !s.empty() && (lemmas.count(s) != 0 || noun_like.count(s) != 0);
  };
  auto lemma = [&](const std::string& s) { return weak(s) || strong_lemmas.count(s) != 0; };
  // Bare and third-person forms are shadowed by the noun reading.
  auto finite_lemma = [&](const std::string& s) { return lemma(s) && !noun_like.count(s); };
  if (finite_lemma(w)) return true;

  auto ends = [&](std::string_view suf) { return w.size() > suf.size() && w.ends_with(suf); };
  auto stem = [&](std::size_t cut) { return w.substr(0, w.size() - cut); };
  // Doubled final consonant ("planned", "stopping").
  auto undoubled = [&](std::size_t cut) {
    const std::string s = stem(cut);
    if (s.size() >= 2 && s.back() == s[s.size() - 2] && !is_vowel(s.back())) {
      return s.substr(0, s.size() - 1);
    }
    return std::string();
  };

  if (ends("ies") && finite_lemma(stem(3) + "y")) return true;
  if (ends("es") && finite_lemma(stem(2))) return true;
  if (ends("s") && !ends("ss") && finite_lemma(stem(1))) return true;

  if (ends("ied") && weak(stem(3) + "y")) return true;
  if (ends("ed") && (weak(stem(2)) || weak(stem(1)) || weak(undoubled(2)))) return true;
  if (ends("ing") && (lemma(stem(3)) || lemma(stem(3) + "e") || lemma(undoubled(3)))) return true;
  return false;
}

}  // namespace scog::sft
