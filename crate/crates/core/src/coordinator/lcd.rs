use serde::{Deserialize, Serialize};

use super::Reading;

pub const LCD_COLS: usize = 16;

/// A 2×16 character display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcdBuffer {
    pub rows: [String; 2],
}

impl Default for LcdBuffer {
    fn default() -> Self {
        Self {
            rows: [" ".repeat(LCD_COLS), " ".repeat(LCD_COLS)],
        }
    }
}

impl LcdBuffer {
    /// Pads or truncates each row to 16 printable ASCII characters.
    pub fn from_rows(row1: &str, row2: &str) -> Self {
        Self {
            rows: [fit_row(row1), fit_row(row2)],
        }
    }
}

fn fit_row(text: &str) -> String {
    let mut row: String = text
        .chars()
        .map(|c| {
            if c.is_ascii_graphic() || c == ' ' {
                c
            } else {
                '?'
            }
        })
        .take(LCD_COLS)
        .collect();
    while row.len() < LCD_COLS {
        row.push(' ');
    }
    row
}

/// `D<addr low 16 bits> T:<temp>C` over `OIL:<OK|LOW> S:<seq>`.
pub fn render_lcd(latest: &Reading) -> LcdBuffer {
    let addr = format!("{:04X}", latest.device_addr.0 & 0xFFFF);
    let row1 = format!("D{addr} T:{:>5.1}C", latest.temp_c);
    let oil = if latest.oil_state.is_low() {
        "LOW"
    } else {
        "OK"
    };
    let row2 = format!("OIL:{oil:<3} S:{:03}", latest.sequence);
    LcdBuffer::from_rows(&row1, &row2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_chain::OilState;
    use crate::NodeAddr;

    fn reading(temp_c: f64, oil: OilState, seq: u8) -> Reading {
        Reading {
            device_addr: NodeAddr(0x0013_A200_40A1_BEEF),
            sequence: seq,
            device_timestamp_s: 0,
            received_at_s: 0,
            temp_c,
            temp_code: 0,
            oil_state: oil,
            battery_mv: 0,
            hops: 1,
        }
    }

    #[test]
    fn reference_layout() {
        let lcd = render_lcd(&reading(100.0, OilState::Normal, 42));
        assert_eq!(lcd.rows[0], "DBEEF T:100.0C  ");
        assert_eq!(lcd.rows[1], "OIL:OK  S:042   ");
    }

    #[test]
    fn low_oil_and_negative_temp() {
        let lcd = render_lcd(&reading(-12.3, OilState::Low, 7));
        assert!(lcd.rows[1].starts_with("OIL:LOW"));
        assert_eq!(lcd.rows[0], "DBEEF T:-12.3C  ");
        assert_eq!(lcd.rows[1], "OIL:LOW S:007   ");
    }

    #[test]
    fn short_temps_right_align() {
        let lcd = render_lcd(&reading(5.04, OilState::Normal, 255));
        assert_eq!(lcd.rows[0], "DBEEF T:  5.0C  ");
        assert_eq!(lcd.rows[1], "OIL:OK  S:255   ");
    }

    #[test]
    fn rows_always_sixteen_printable() {
        let lcd = LcdBuffer::from_rows("way too long for one lcd row", "tab\there");
        for row in &lcd.rows {
            assert_eq!(row.len(), 16);
            assert!(row.chars().all(|c| c == ' ' || c.is_ascii_graphic()));
        }
        assert_eq!(LcdBuffer::default().rows[0].len(), 16);
    }
}
