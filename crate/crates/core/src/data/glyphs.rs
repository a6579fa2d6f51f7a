//! Fixed binary glyph bitmaps for the two synthetic views: bold digit shapes
//! for view A (10 rows x 6 columns) and numeral-like bar patterns for view B
//! (6 rows, up to 9 columns). Tall-narrow versus short-wide keeps a band of
//! glyph-free columns on view A and glyph-free rows on view B.

pub const NUM_GLYPHS: usize = 10;

/// 3x5 digit font; rendered at twice the size for 2-pixel strokes.
const ARABIC: [[&str; 5]; NUM_GLYPHS] = [
    ["###", "#.#", "#.#", "#.#", "###"],
    [".#.", "##.", ".#.", ".#.", "###"],
    ["###", "..#", "###", "#..", "###"],
    ["###", "..#", "###", "..#", "###"],
    ["#.#", "#.#", "###", "..#", "..#"],
    ["###", "#..", "###", "..#", "###"],
    ["###", "#..", "###", "#.#", "###"],
    ["###", "..#", "..#", "..#", "..#"],
    ["###", "#.#", "###", "#.#", "###"],
    ["###", "#.#", "###", "..#", "###"],
];

const ROMAN: [[&str; 6]; NUM_GLYPHS] = [
    ["#", "#", "#", "#", "#", "#"],
    ["#.#", "#.#", "#.#", "#.#", "#.#", "#.#"],
    ["#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#"],
    ["#.#.#", "#.#.#", "#.#.#", "#.#.#", "#..#.", "#..#."],
    ["#.#", "#.#", "#.#", "#.#", ".#.", ".#."],
    ["#.#.#", "#.#.#", "#.#.#", "#.#.#", ".#..#", ".#..#"],
    [
        "#.#.#.#", "#.#.#.#", "#.#.#.#", "#.#.#.#", ".#..#.#", ".#..#.#",
    ],
    [
        "#.#.#.#.#",
        "#.#.#.#.#",
        "#.#.#.#.#",
        "#.#.#.#.#",
        ".#..#.#.#",
        ".#..#.#.#",
    ],
    ["#.#.#", "#.#.#", "#..#.", "#..#.", "#.#.#", "#.#.#"],
    ["#.#", "#.#", ".#.", ".#.", "#.#", "#.#"],
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub rows: usize,
    pub cols: usize,
    pixels: Vec<bool>,
}

impl Glyph {
    fn parse(lines: &[&str], scale: usize) -> Glyph {
        let cols = lines.iter().map(|l| l.len()).max().unwrap_or(0) * scale;
        let rows = lines.len() * scale;
        let mut pixels = vec![false; rows * cols];
        for (r, line) in lines.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                if ch == '#' {
                    for dr in 0..scale {
                        for dc in 0..scale {
                            pixels[(r * scale + dr) * cols + c * scale + dc] = true;
                        }
                    }
                }
            }
        }
        Glyph { rows, cols, pixels }
    }

    pub fn at(&self, r: usize, c: usize) -> bool {
        self.pixels[r * self.cols + c]
    }
}

pub fn arabic(class: usize) -> Glyph {
    Glyph::parse(&ARABIC[class], 2)
}

pub fn roman(class: usize) -> Glyph {
    Glyph::parse(&ROMAN[class], 1)
}
