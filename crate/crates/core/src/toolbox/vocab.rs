//! Fixed label vocabularies for the annotation-backed tools.

/// Object classes recognised by Object Detection, in display form.
pub const OBJECT_LABELS: [&str; 80] = [
    "Person",
    "Bicycle",
    "Car",
    "Motorcycle",
    "Airplane",
    "Bus",
    "Train",
    "Truck",
    "Boat",
    "Traffic Light",
    "Fire Hydrant",
    "Stop Sign",
    "Parking Meter",
    "Bench",
    "Bird",
    "Cat",
    "Dog",
    "Horse",
    "Sheep",
    "Cow",
    "Elephant",
    "Bear",
    "Zebra",
    "Giraffe",
    "Backpack",
    "Umbrella",
    "Handbag",
    "Tie",
    "Suitcase",
    "Frisbee",
    "Skis",
    "Snowboard",
    "Sports Ball",
    "Kite",
    "Baseball Bat",
    "Baseball Glove",
    "Skateboard",
    "Surfboard",
    "Racket",
    "Bottle",
    "Wine Glass",
    "Cup",
    "Fork",
    "Knife",
    "Spoon",
    "Bowl",
    "Banana",
    "Apple",
    "Sandwich",
    "Orange",
    "Broccoli",
    "Carrot",
    "Hot Dog",
    "Pizza",
    "Donut",
    "Cake",
    "Chair",
    "Couch",
    "Potted Plant",
    "Bed",
    "Dining Table",
    "Toilet",
    "TV",
    "Laptop",
    "Mouse",
    "Remote",
    "Keyboard",
    "Phone",
    "Microwave",
    "Oven",
    "Toaster",
    "Sink",
    "Refrigerator",
    "Book",
    "Clock",
    "Vase",
    "Scissors",
    "Teddy Bear",
    "Hair Drier",
    "Toothbrush",
];

/// Vehicle types reported by Vehicle Detection. Annotations use these spellings verbatim.
pub const VEHICLE_TYPES: [&str; 9] = [
    "sedan",
    "SUV",
    "van",
    "hatchback",
    "MPV",
    "pickup",
    "bus",
    "truck",
    "estate",
];

pub const VEHICLE_COLORS: [&str; 10] = [
    "yellow", "orange", "green", "gray", "red", "blue", "white", "golden", "brown", "black",
];

/// Traffic sign names recognised by Traffic Sign Detection.
pub const TRAFFIC_SIGNS: [&str; 43] = [
    "Speed Limit 80",
    "No Bicycles",
    "No U-Turn",
    "Maximum Weight 55t",
    "Speed Limit 60",
    "Pedestrian Crossing",
    "No Honking",
    "Non-motor Vehicle Lane",
    "No Left Turn",
    "Yield",
    "Minimum Speed Limit 80",
    "Height Limit 4m",
    "Motor Vehicle Lane",
    "Speed Limit 70",
    "No Entry",
    "Height Limit 4.5m",
    "No Motorcycles",
    "No Large Buses",
    "No Rickshaws",
    "Crossroad Motor Vehicle Lane",
    "Speed Limit 30",
    "No Motor Vehicles",
    "No Parking (Except for Loading or Unloading)",
    "Children Crossing",
    "No Trucks",
    "No Two Specific Vehicles",
    "End of Speed Limit",
    "Speed Limit 20",
    "Maximum Weight 30t",
    "Speed Limit 40",
    "Speed Limit 120",
    "Road Work Ahead",
    "Height Limit 5m",
    "Minimum Speed Limit 60",
    "Pedestrians Crossing",
    "Speed Limit 100",
    "Merge Ahead",
    "Minimum Speed Limit 100",
    "No Right Turn",
    "Maximum Weight 20t",
    "Keep Right",
    "No Hazardous Materials",
    "Speed Limit 50",
];

pub const TRAFFIC_SIGN_LABELS: [&str; 1] = ["Traffic Sign"];

pub const MOTION_LABELS: [&str; 2] = ["accident", "collision"];

/// Object annotations carry the lowercase form of an [`OBJECT_LABELS`] entry.
pub fn is_object_label(label: &str) -> bool {
    OBJECT_LABELS.iter().any(|l| l.to_lowercase() == label)
}

pub fn is_vehicle_type(vtype: &str) -> bool {
    VEHICLE_TYPES.contains(&vtype)
}

pub fn is_vehicle_color(color: &str) -> bool {
    VEHICLE_COLORS.contains(&color)
}

pub fn is_traffic_sign(name: &str) -> bool {
    TRAFFIC_SIGNS.contains(&name)
}
