//! Color names to RGB, backed by the CSS extended color keywords.

use alloc::string::String;

/// An RGB triple with every channel in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RgbColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl RgbColor {
    /// Fallback for names that cannot be resolved.
    pub const NEUTRAL_GRAY: RgbColor = RgbColor { r: 0.5, g: 0.5, b: 0.5 };

    /// Returns `None` unless every channel is finite and within `[0, 1]`.
    pub fn new(r: f64, g: f64, b: f64) -> Option<Self> {
        let ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        (ok(r) && ok(g) && ok(b)).then_some(RgbColor { r, g, b })
    }

    pub fn from_u8(r: u8, g: u8, b: u8) -> Self {
        RgbColor {
            r: f64::from(r) / 255.0,
            g: f64::from(g) / 255.0,
            b: f64::from(b) / 255.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

/// Exact lookup in the bundled table; `name` must already be lowercase.
pub fn lookup_css(name: &str) -> Option<RgbColor> {
    CSS_COLORS
        .binary_search_by(|(n, ..)| (*n).cmp(name))
        .ok()
        .map(|i| {
            let (_, r, g, b) = CSS_COLORS[i];
            RgbColor::from_u8(r, g, b)
        })
}

/// Maps a free-text color name to RGB.
///
/// The trimmed, lowercased name is looked up directly, then with its spaces
/// removed (`"light blue"` finds `lightblue`). Otherwise every word that
/// names a table color contributes to an unweighted mean, so
/// `"red and brown"` is halfway between red and brown. Names with no
/// resolvable word map to [`RgbColor::NEUTRAL_GRAY`].
pub fn color_to_rgb(name: &str) -> RgbColor {
    let name = name.trim().to_lowercase();
    if let Some(c) = lookup_css(&name) {
        return c;
    }
    let squashed: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(c) = lookup_css(&squashed) {
        return c;
    }
    let mut sum = [0.0; 3];
    let mut count = 0usize;
    for word in name.split(|c: char| c.is_whitespace() || c == ',' || c == '-' || c == '/') {
        if let Some(c) = lookup_css(word) {
            sum[0] += c.r;
            sum[1] += c.g;
            sum[2] += c.b;
            count += 1;
        }
    }
    if count == 0 {
        return RgbColor::NEUTRAL_GRAY;
    }
    let n = count as f64;
    RgbColor {
        r: sum[0] / n,
        g: sum[1] / n,
        b: sum[2] / n,
    }
}

/// The 148 CSS color keywords, sorted by name.
pub static CSS_COLORS: [(&str, u8, u8, u8); 148] = [
    ("aliceblue", 240, 248, 255),
    ("antiquewhite", 250, 235, 215),
    ("aqua", 0, 255, 255),
    ("aquamarine", 127, 255, 212),
    ("azure", 240, 255, 255),
    ("beige", 245, 245, 220),
    ("bisque", 255, 228, 196),
    ("black", 0, 0, 0),
    ("blanchedalmond", 255, 235, 205),
    ("blue", 0, 0, 255),
    ("blueviolet", 138, 43, 226),
    ("brown", 165, 42, 42),
    ("burlywood", 222, 184, 135),
    ("cadetblue", 95, 158, 160),
    ("chartreuse", 127, 255, 0),
    ("chocolate", 210, 105, 30),
    ("coral", 255, 127, 80),
    ("cornflowerblue", 100, 149, 237),
    ("cornsilk", 255, 248, 220),
    ("crimson", 220, 20, 60),
    ("cyan", 0, 255, 255),
    ("darkblue", 0, 0, 139),
    ("darkcyan", 0, 139, 139),
    ("darkgoldenrod", 184, 134, 11),
    ("darkgray", 169, 169, 169),
    ("darkgreen", 0, 100, 0),
    ("darkgrey", 169, 169, 169),
    ("darkkhaki", 189, 183, 107),
    ("darkmagenta", 139, 0, 139),
    ("darkolivegreen", 85, 107, 47),
    ("darkorange", 255, 140, 0),
    ("darkorchid", 153, 50, 204),
    ("darkred", 139, 0, 0),
    ("darksalmon", 233, 150, 122),
    ("darkseagreen", 143, 188, 143),
    ("darkslateblue", 72, 61, 139),
    ("darkslategray", 47, 79, 79),
    ("darkslategrey", 47, 79, 79),
    ("darkturquoise", 0, 206, 209),
    ("darkviolet", 148, 0, 211),
    ("deeppink", 255, 20, 147),
    ("deepskyblue", 0, 191, 255),
    ("dimgray", 105, 105, 105),
    ("dimgrey", 105, 105, 105),
    ("dodgerblue", 30, 144, 255),
    ("firebrick", 178, 34, 34),
    ("floralwhite", 255, 250, 240),
    ("forestgreen", 34, 139, 34),
    ("fuchsia", 255, 0, 255),
    ("gainsboro", 220, 220, 220),
    ("ghostwhite", 248, 248, 255),
    ("gold", 255, 215, 0),
    ("goldenrod", 218, 165, 32),
    ("gray", 128, 128, 128),
    ("green", 0, 128, 0),
    ("greenyellow", 173, 255, 47),
    ("grey", 128, 128, 128),
    ("honeydew", 240, 255, 240),
    ("hotpink", 255, 105, 180),
    ("indianred", 205, 92, 92),
    ("indigo", 75, 0, 130),
    ("ivory", 255, 255, 240),
    ("khaki", 240, 230, 140),
    ("lavender", 230, 230, 250),
    ("lavenderblush", 255, 240, 245),
    ("lawngreen", 124, 252, 0),
    ("lemonchiffon", 255, 250, 205),
    ("lightblue", 173, 216, 230),
    ("lightcoral", 240, 128, 128),
    ("lightcyan", 224, 255, 255),
    ("lightgoldenrodyellow", 250, 250, 210),
    ("lightgray", 211, 211, 211),
    ("lightgreen", 144, 238, 144),
    ("lightgrey", 211, 211, 211),
    ("lightpink", 255, 182, 193),
    ("lightsalmon", 255, 160, 122),
    ("lightseagreen", 32, 178, 170),
    ("lightskyblue", 135, 206, 250),
    ("lightslategray", 119, 136, 153),
    ("lightslategrey", 119, 136, 153),
    ("lightsteelblue", 176, 196, 222),
    ("lightyellow", 255, 255, 224),
    ("lime", 0, 255, 0),
    ("limegreen", 50, 205, 50),
    ("linen", 250, 240, 230),
    ("magenta", 255, 0, 255),
    ("maroon", 128, 0, 0),
    ("mediumaquamarine", 102, 205, 170),
    ("mediumblue", 0, 0, 205),
    ("mediumorchid", 186, 85, 211),
    ("mediumpurple", 147, 112, 219),
    ("mediumseagreen", 60, 179, 113),
    ("mediumslateblue", 123, 104, 238),
    ("mediumspringgreen", 0, 250, 154),
    ("mediumturquoise", 72, 209, 204),
    ("mediumvioletred", 199, 21, 133),
    ("midnightblue", 25, 25, 112),
    ("mintcream", 245, 255, 250),
    ("mistyrose", 255, 228, 225),
    ("moccasin", 255, 228, 181),
    ("navajowhite", 255, 222, 173),
    ("navy", 0, 0, 128),
    ("oldlace", 253, 245, 230),
    ("olive", 128, 128, 0),
    ("olivedrab", 107, 142, 35),
    ("orange", 255, 165, 0),
    ("orangered", 255, 69, 0),
    ("orchid", 218, 112, 214),
    ("palegoldenrod", 238, 232, 170),
    ("palegreen", 152, 251, 152),
    ("paleturquoise", 175, 238, 238),
    ("palevioletred", 219, 112, 147),
    ("papayawhip", 255, 239, 213),
    ("peachpuff", 255, 218, 185),
    ("peru", 205, 133, 63),
    ("pink", 255, 192, 203),
    ("plum", 221, 160, 221),
    ("powderblue", 176, 224, 230),
    ("purple", 128, 0, 128),
    ("rebeccapurple", 102, 51, 153),
    ("red", 255, 0, 0),
    ("rosybrown", 188, 143, 143),
    ("royalblue", 65, 105, 225),
    ("saddlebrown", 139, 69, 19),
    ("salmon", 250, 128, 114),
    ("sandybrown", 244, 164, 96),
    ("seagreen", 46, 139, 87),
    ("seashell", 255, 245, 238),
    ("sienna", 160, 82, 45),
    ("silver", 192, 192, 192),
    ("skyblue", 135, 206, 235),
    ("slateblue", 106, 90, 205),
    ("slategray", 112, 128, 144),
    ("slategrey", 112, 128, 144),
    ("snow", 255, 250, 250),
    ("springgreen", 0, 255, 127),
    ("steelblue", 70, 130, 180),
    ("tan", 210, 180, 140),
    ("teal", 0, 128, 128),
    ("thistle", 216, 191, 216),
    ("tomato", 255, 99, 71),
    ("turquoise", 64, 224, 208),
    ("violet", 238, 130, 238),
    ("wheat", 245, 222, 179),
    ("white", 255, 255, 255),
    ("whitesmoke", 245, 245, 245),
    ("yellow", 255, 255, 0),
    ("yellowgreen", 154, 205, 50),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_sorted_and_unique() {
        assert!(CSS_COLORS.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn exact_names() {
        assert_eq!(color_to_rgb("red"), RgbColor { r: 1.0, g: 0.0, b: 0.0 });
        assert_eq!(color_to_rgb("  White "), RgbColor { r: 1.0, g: 1.0, b: 1.0 });
        assert_eq!(color_to_rgb("light blue"), lookup_css("lightblue").unwrap());
    }

    #[test]
    fn phrases_average_their_words() {
        // red (255, 0, 0) and brown (165, 42, 42)
        let c = color_to_rgb("red and brown");
        let expected = [(255.0 + 165.0) / 2.0 / 255.0, 21.0 / 255.0, 21.0 / 255.0];
        for (got, want) in c.as_array().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_is_gray() {
        assert_eq!(color_to_rgb("glorp"), RgbColor::NEUTRAL_GRAY);
        assert_eq!(color_to_rgb(""), RgbColor::NEUTRAL_GRAY);
    }
}
