// SPDX-License-Identifier: Apache-2.0
#include "bevseg/synth/recipe.hpp"

#include <json.hpp>

namespace bevseg::synth {

using nlohmann::json;

namespace {

json range_to_json(const Range& r) { return json{{"lo", r.lo}, {"hi", r.hi}}; }

Range range_from_json(const json& j) {
  Range r;
  r.lo = j.at("lo").get<double>();
  r.hi = j.at("hi").get<double>();
  require(r.hi >= r.lo, "recipe: range hi < lo");
  return r;
}

}  // namespace

std::string SceneRecipe::to_json() const {
  json j;
  j["classes"] = classes;
  j["road_enabled"] = road_enabled;
  j["road_width"] = range_to_json(road_width);
  j["road_heading_max"] = road_heading_max;
  j["road_curvature_max"] = road_curvature_max;
  j["road_offset_max"] = road_offset_max;
  j["walkway_width"] = range_to_json(walkway_width);
  j["crossings_mean"] = crossings_mean;
  j["crossing_length"] = crossing_length;
  j["cars_mean"] = cars_mean;
  j["car_length"] = range_to_json(car_length);
  j["car_width"] = range_to_json(car_width);
  j["car_height"] = range_to_json(car_height);
  j["trucks_mean"] = trucks_mean;
  j["truck_length"] = range_to_json(truck_length);
  j["truck_width"] = range_to_json(truck_width);
  j["truck_height"] = range_to_json(truck_height);
  j["pedestrians_mean"] = pedestrians_mean;
  j["ped_size"] = range_to_json(ped_size);
  j["ped_height"] = range_to_json(ped_height);
  j["object_x_min"] = object_x_min;
  j["object_x_max"] = object_x_max;
  j["max_vehicles"] = max_vehicles;
  j["fixed_objects"] = json::array();
  for (const auto& o : fixed_objects)
    j["fixed_objects"].push_back(json{{"class", o.cls},
                                      {"x", o.x},
                                      {"y", o.y},
                                      {"heading", o.heading},
                                      {"length", o.length},
                                      {"width", o.width},
                                      {"height", o.height}});
  return j.dump();
}

SceneRecipe SceneRecipe::from_json(const std::string& text) {
  const json j = json::parse(text);
  SceneRecipe r;
  r.classes = j.at("classes").get<std::vector<std::string>>();
  r.road_enabled = j.at("road_enabled").get<bool>();
  r.road_width = range_from_json(j.at("road_width"));
  r.road_heading_max = j.at("road_heading_max").get<double>();
  r.road_curvature_max = j.at("road_curvature_max").get<double>();
  r.road_offset_max = j.at("road_offset_max").get<double>();
  r.walkway_width = range_from_json(j.at("walkway_width"));
  r.crossings_mean = j.at("crossings_mean").get<double>();
  r.crossing_length = j.at("crossing_length").get<double>();
  r.cars_mean = j.at("cars_mean").get<double>();
  r.car_length = range_from_json(j.at("car_length"));
  r.car_width = range_from_json(j.at("car_width"));
  r.car_height = range_from_json(j.at("car_height"));
  r.trucks_mean = j.at("trucks_mean").get<double>();
  r.truck_length = range_from_json(j.at("truck_length"));
  r.truck_width = range_from_json(j.at("truck_width"));
  r.truck_height = range_from_json(j.at("truck_height"));
  r.pedestrians_mean = j.at("pedestrians_mean").get<double>();
  r.ped_size = range_from_json(j.at("ped_size"));
  r.ped_height = range_from_json(j.at("ped_height"));
  r.object_x_min = j.at("object_x_min").get<double>();
  r.object_x_max = j.at("object_x_max").get<double>();
  r.max_vehicles = j.at("max_vehicles").get<int>();
  for (const auto& jo : j.at("fixed_objects")) {
    ObjectSpec o;
    o.cls = jo.at("class").get<std::string>();
    o.x = jo.at("x").get<double>();
    o.y = jo.at("y").get<double>();
    o.heading = jo.at("heading").get<double>();
    o.length = jo.at("length").get<double>();
    o.width = jo.at("width").get<double>();
    o.height = jo.at("height").get<double>();
    r.fixed_objects.push_back(o);
  }
  r.validate();
  return r;
}

}  // namespace bevseg::synth
