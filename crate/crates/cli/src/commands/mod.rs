pub mod charts;
pub mod gauge;
pub mod linear;
pub mod mechanics;
pub mod oscillator;

fn default_schema() -> u32 {
    1
}
