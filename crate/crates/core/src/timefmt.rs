/// Largest accepted UTC offset magnitude, in minutes (UTC+14:00).
pub const MAX_UTC_OFFSET_MIN: i32 = 840;

const MS_PER_MINUTE: i64 = 60_000;
const MINUTES_PER_DAY: i64 = 24 * 60;

/// Renders `ts_ms` as local wall-clock time: 12-hour hour without a leading
/// zero, two-digit minute, then `am` or `pm` (`"9:07 am"`, `"12:30 pm"`).
pub fn format_timestamp(ts_ms: u64, utc_offset_min: i32) -> String {
    let local_min = (ts_ms as i64).div_euclid(MS_PER_MINUTE) + i64::from(utc_offset_min);
    let minute_of_day = local_min.rem_euclid(MINUTES_PER_DAY);
    let (hour24, minute) = (minute_of_day / 60, minute_of_day % 60);
    let hour12 = match hour24 % 12 {
        0 => 12,
        h => h,
    };
    let meridiem = if hour24 < 12 { "am" } else { "pm" };
    format!("{hour12}:{minute:02} {meridiem}")
}
